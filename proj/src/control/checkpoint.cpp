#include "wavesmooth/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include "wavesmooth/error.hpp"

namespace wavesmooth::control {

namespace {

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

void put_f64(std::vector<unsigned char>& out, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

class Reader {
 public:
  Reader(const std::vector<unsigned char>& bytes, std::string path)
      : bytes_(bytes), path_(std::move(path)) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
    return v;
  }

  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
    return std::bit_cast<double>(v);
  }

  void magic() {
    need(sizeof kCheckpointMagic);
    if (std::memcmp(bytes_.data(), kCheckpointMagic, sizeof kCheckpointMagic) != 0) {
      throw DataError(path_ + ": not a policy checkpoint");
    }
    pos_ += sizeof kCheckpointMagic;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw DataError(path_ + ": checkpoint is truncated");
  }

  const std::vector<unsigned char>& bytes_;
  std::string path_;
  std::size_t pos_ = 0;
};

void put_sizes(std::vector<unsigned char>& out, const std::vector<int>& sizes) {
  put_u32(out, static_cast<std::uint32_t>(sizes.size()));
  for (int s : sizes) put_u32(out, static_cast<std::uint32_t>(s));
}

void expect_sizes(Reader& in, const std::vector<int>& expected, const std::string& what,
                  const std::string& path) {
  const auto n = in.u32();
  std::vector<int> got;
  for (std::uint32_t i = 0; i < n && i < 64; ++i) got.push_back(static_cast<int>(in.u32()));
  if (got != expected) throw DataError(path + ": " + what + " layer sizes do not match");
}

}  // namespace

void save_checkpoint(const PolicyParameters& params, const std::string& path) {
  const Mlp actor = make_actor_net();
  const Mlp value = make_value_net();
  if (params.actor.size() != actor.num_params() || params.value.size() != value.num_params()) {
    throw DataError("policy parameters do not match the network shapes");
  }
  std::vector<unsigned char> out(std::begin(kCheckpointMagic), std::end(kCheckpointMagic));
  put_u32(out, kCheckpointVersion);
  put_u32(out, params.planner_obs ? kFlagPlannerObs : 0u);
  put_sizes(out, actor.sizes());
  put_sizes(out, value.sizes());
  put_f64(out, params.log_std);
  for (double w : params.actor) put_f64(out, w);
  for (double w : params.value) put_f64(out, w);

  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write checkpoint " + path);
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!f) throw DataError("failed writing checkpoint " + path);
}

PolicyParameters load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open checkpoint " + path);
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)),
                                         std::istreambuf_iterator<char>());
  Reader in(bytes, path);
  in.magic();
  const auto version = in.u32();
  if (version != kCheckpointVersion) {
    throw DataError(path + ": unsupported checkpoint version " + std::to_string(version));
  }
  const auto flags = in.u32();
  const Mlp actor = make_actor_net();
  const Mlp value = make_value_net();
  expect_sizes(in, actor.sizes(), "actor", path);
  expect_sizes(in, value.sizes(), "value", path);

  PolicyParameters p;
  p.planner_obs = (flags & kFlagPlannerObs) != 0;
  p.log_std = in.f64();
  p.actor.resize(actor.num_params());
  for (auto& w : p.actor) w = in.f64();
  p.value.resize(value.num_params());
  for (auto& w : p.value) w = in.f64();
  if (!in.done()) throw DataError(path + ": trailing bytes after checkpoint payload");
  if (!p.actor.allFinite() || !p.value.allFinite() || !std::isfinite(p.log_std)) {
    throw DataError(path + ": checkpoint holds non-finite parameters");
  }
  return p;
}

void export_text(const PolicyParameters& params, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  char buf[64];
  auto emit = [&](const char* label, double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << label << ' ' << buf << '\n';
  };
  out << "# wavesmooth policy v" << kCheckpointVersion
      << " planner_obs=" << (params.planner_obs ? 1 : 0) << '\n';
  emit("log_std", params.log_std);
  auto dump = [&](const Mlp& net, const Eigen::VectorXd& w, const char* name) {
    for (int l = 0; l < net.layers(); ++l) {
      const auto in = net.sizes()[static_cast<std::size_t>(l)];
      const auto outs = net.sizes()[static_cast<std::size_t>(l) + 1];
      out << "# " << name << " layer " << l << " W " << outs << 'x' << in << '\n';
      for (auto i = net.weight_offset(l); i < net.bias_offset(l); ++i) emit("w", w[i]);
      out << "# " << name << " layer " << l << " b " << outs << '\n';
      for (auto i = net.bias_offset(l); i < net.bias_offset(l) + outs; ++i) emit("b", w[i]);
    }
  };
  dump(make_actor_net(), params.actor, "actor");
  dump(make_value_net(), params.value, "value");
}

}  // namespace wavesmooth::control
