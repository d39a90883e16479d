#include <filesystem>

#include "wavesmooth/trajectory.hpp"

namespace wavesmooth::data {

namespace {

WaveSpec wave(double duration, double v_base, int waves, double v_min, double decel,
              double hold) {
  WaveSpec s;
  s.duration = duration;
  s.v_base = v_base;
  s.waves = waves;
  s.v_min = v_min;
  s.decel = decel;
  s.hold = hold;
  return s;
}

}  // namespace

std::vector<DatasetEntry> standard_datasets() {
  return {
      {"train/train_1.csv", wave(900, 20, 10, 6, 1.5, 3), 101},
      {"train/train_2.csv", wave(900, 18, 10, 4, 1.5, 4), 102},
      {"train/train_3.csv", wave(900, 22, 9, 8, 1.5, 3), 103},
      {"train/train_4.csv", wave(900, 16, 10, 3, 2.0, 4), 104},
      {"eval/eval_1.csv", wave(600, 30, 0, 0, 1.5, 0), 201},
      {"eval/eval_2.csv", wave(900, 20, 10, 6, 1.5, 3), 202},
      {"eval/eval_3.csv", wave(900, 18, 9, 5, 1.5, 3), 203},
      {"eval/eval_4.csv", wave(800, 25, 6, 10, 1.5, 4), 204},
      {"eval/eval_5.csv", wave(600, 28, 5, 2, 2.0, 8), 205},
      {"eval/eval_6.csv", wave(1200, 22, 12, 4, 1.5, 4), 206},
  };
}

std::vector<std::string> generate_datasets(const std::string& data_dir) {
  std::vector<std::string> written;
  for (const auto& entry : standard_datasets()) {
    std::mt19937_64 rng(entry.seed);
    const auto path = std::filesystem::path(data_dir) / entry.path;
    std::filesystem::create_directories(path.parent_path());
    const auto traj = generate_synthetic_wave(entry.spec, rng, path.stem().string());
    save_trajectory(traj, path.string());
    written.push_back(path.string());
  }
  return written;
}

}  // namespace wavesmooth::data
