#include "wavesmooth/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "wavesmooth/error.hpp"
#include "yaml_section.hpp"

namespace wavesmooth {

std::string_view to_string(VehicleKind kind) {
  switch (kind) {
    case VehicleKind::TrajectoryLeader:
      return "leader";
    case VehicleKind::AV:
      return "av";
    case VehicleKind::Human:
      return "human";
  }
  return "?";
}

std::vector<VehicleKind> SimConfig::default_layout(int humans) {
  std::vector<VehicleKind> layout{VehicleKind::TrajectoryLeader, VehicleKind::AV};
  layout.insert(layout.end(), static_cast<std::size_t>(humans), VehicleKind::Human);
  return layout;
}

namespace {

using detail::Section;

VehicleKind parse_kind(const std::string& token, const std::string& field) {
  if (token == "leader") return VehicleKind::TrajectoryLeader;
  if (token == "av") return VehicleKind::AV;
  if (token == "human") return VehicleKind::Human;
  throw ConfigError(field, "unknown vehicle kind '" + token + "'");
}

// Tokens are `kind` or `kind*N`.
std::vector<VehicleKind> parse_layout(const std::vector<std::string>& tokens,
                                      const std::string& field) {
  std::vector<VehicleKind> layout;
  for (const auto& token : tokens) {
    const auto star = token.find('*');
    if (star == std::string::npos) {
      layout.push_back(parse_kind(token, field));
      continue;
    }
    int count = 0;
    try {
      std::size_t used = 0;
      count = std::stoi(token.substr(star + 1), &used);
      if (used != token.size() - star - 1) throw std::invalid_argument(token);
    } catch (const std::exception&) {
      throw ConfigError(field, "bad repeat count in '" + token + "'");
    }
    if (count < 1) throw ConfigError(field, "repeat count must be >= 1 in '" + token + "'");
    layout.insert(layout.end(), static_cast<std::size_t>(count),
                  parse_kind(token.substr(0, star), field));
  }
  return layout;
}

std::vector<std::string> layout_tokens(const std::vector<VehicleKind>& layout) {
  std::vector<std::string> tokens;
  for (std::size_t i = 0; i < layout.size();) {
    std::size_t j = i;
    while (j < layout.size() && layout[j] == layout[i]) ++j;
    std::string name(to_string(layout[i]));
    tokens.push_back(j - i == 1 ? name : name + "*" + std::to_string(j - i));
    i = j;
  }
  return tokens;
}

void apply_override(YAML::Node& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError(assignment, "override must look like key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);
  std::vector<std::string> parts;
  std::stringstream ss(key);
  for (std::string part; std::getline(ss, part, '.');) parts.push_back(part);

  // yaml-cpp nodes are handles; operator[] on a non-const node creates entries.
  std::vector<YAML::Node> chain{root};
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    YAML::Node next = chain.back()[parts[i]];
    if (next.IsDefined() && !next.IsNull() && !next.IsMap()) {
      throw ConfigError(key, "'" + parts[i] + "' is not a section");
    }
    chain.push_back(next);
  }
  YAML::Node parsed;
  try {
    parsed = YAML::Load(value);
  } catch (const YAML::Exception& e) {
    throw ConfigError(key, "cannot parse override value '" + value + "'");
  }
  chain.back()[parts.back()] = parsed;
}

SimConfig from_node(const YAML::Node& root) {
  SimConfig c;
  Section top(root, "");
  top.read("seed", c.seed);

  {
    Section s(top.child("sim"), "sim");
    s.read("dt", c.dt);
    s.read("action_repeat", c.action_repeat);
    s.read("horizon_env_steps", c.horizon_env_steps);
    s.read_pair("speed_bounds", c.v_lo, c.v_hi);
    s.read_pair("accel_bounds", c.a_lo, c.a_hi);
    std::vector<std::string> tokens = layout_tokens(c.platoon_layout);
    s.read("platoon", tokens);
    c.platoon_layout = parse_layout(tokens, "sim.platoon");
    s.reject_unknown();
  }
  {
    Section s(top.child("idm"), "idm");
    s.read("v0", c.idm.v0);
    s.read("T", c.idm.time_headway);
    s.read("s0", c.idm.jam_distance);
    s.read("a_max", c.idm.max_accel);
    s.read("b", c.idm.comfort_decel);
    s.read("delta", c.idm.delta);
    s.reject_unknown();
  }
  {
    Section s(top.child("energy"), "energy");
    std::vector<double> coeffs(c.energy.coeffs.begin(), c.energy.coeffs.end());
    s.read("coeffs", coeffs);
    if (coeffs.size() != c.energy.coeffs.size()) {
      throw ConfigError("energy.coeffs", "expected 8 coefficients, got " +
                                             std::to_string(coeffs.size()));
    }
    std::copy(coeffs.begin(), coeffs.end(), c.energy.coeffs.begin());
    s.read("idle_floor", c.energy.idle_floor);
    s.reject_unknown();
  }
  {
    Section s(top.child("lane_change"), "lane_change");
    if (auto pieces = s.child("cut_in"); pieces) {
      if (!pieces.IsSequence()) throw ConfigError("lane_change.cut_in", "expected a list");
      c.lane_change.cut_in.clear();
      for (std::size_t i = 0; i < pieces.size(); ++i) {
        const std::string path = "lane_change.cut_in[" + std::to_string(i) + "]";
        Section p(pieces[i], path);
        CutInPiece piece;
        p.read("h_lo", piece.h_lo);
        p.read("h_hi", piece.h_hi);
        std::vector<double> k(6, 0.0);
        p.read("coeffs", k);
        if (k.size() != 6) throw ConfigError(path + ".coeffs", "expected 6 coefficients");
        std::copy(k.begin(), k.end(), piece.coeffs.begin());
        p.reject_unknown();
        c.lane_change.cut_in.push_back(piece);
      }
    }
    if (auto pieces = s.child("cut_out"); pieces) {
      if (!pieces.IsSequence()) throw ConfigError("lane_change.cut_out", "expected a list");
      c.lane_change.cut_out.clear();
      for (std::size_t i = 0; i < pieces.size(); ++i) {
        const std::string path = "lane_change.cut_out[" + std::to_string(i) + "]";
        Section p(pieces[i], path);
        CutOutPiece piece;
        p.read("v_lo", piece.v_lo);
        p.read("v_hi", piece.v_hi);
        std::vector<double> k(3, 0.0);
        p.read("coeffs", k);
        if (k.size() != 3) throw ConfigError(path + ".coeffs", "expected 3 coefficients");
        std::copy(k.begin(), k.end(), piece.coeffs.begin());
        p.reject_unknown();
        c.lane_change.cut_out.push_back(piece);
      }
    }
    s.read("gap_ratio_mu", c.lane_change.gap_ratio_mu);
    s.read("gap_ratio_sigma", c.lane_change.gap_ratio_sigma);
    s.read_pair("ratio_clip", c.lane_change.ratio_lo, c.lane_change.ratio_hi);
    s.read("min_insert_gap", c.lane_change.min_insert_gap);
    s.read("max_follower_decel", c.lane_change.max_follower_decel);
    s.reject_unknown();
  }
  {
    Section s(top.child("planner"), "planner");
    s.read("enabled", c.planner.enabled);
    s.read("bandwidth", c.planner.bandwidth);
    s.read("segment_length", c.planner.segment_length);
    s.read("delay", c.planner.delay);
    s.read("update_interval", c.planner.update_interval);
    s.read("knot_spacing", c.planner.knot_spacing);
    s.reject_unknown();
  }
  {
    Section s(top.child("reward"), "reward");
    s.read("c1", c.reward.c1);
    s.read("c2", c.reward.c2);
    s.read("c3", c.reward.c3);
    s.read("c4", c.reward.c4);
    s.read("platoon_size_n", c.reward.platoon_size_n);
    s.reject_unknown();
  }
  {
    Section s(top.child("train"), "train");
    auto& t = c.train;
    s.read("gamma", t.gamma);
    s.read("gae_lambda", t.gae_lambda);
    s.read("clip_eps", t.clip_eps);
    s.read("lr", t.lr);
    s.read("epochs_per_iter", t.epochs_per_iter);
    s.read("iterations", t.iterations);
    s.read("batch_size", t.batch_size);
    s.read("minibatch_size", t.minibatch_size);
    s.read("value_coeff", t.value_coeff);
    s.read("entropy_coeff", t.entropy_coeff);
    s.read("max_grad_norm", t.max_grad_norm);
    s.read("log_std_init", t.log_std_init);
    s.read("clip_value_loss", t.clip_value_loss);
    s.read("checkpoint_every", t.checkpoint_every);
    s.read("jobs", t.jobs);
    s.read("trajectories", t.trajectories);
    s.reject_unknown();
  }
  top.reject_unknown();
  return c;
}

[[noreturn]] void bad(const std::string& field, double value, const std::string& rule) {
  std::ostringstream os;
  os.precision(17);
  os << "invalid value " << value << " (" << rule << ")";
  throw ConfigError(field, os.str());
}

void require(bool ok, const std::string& field, double value, const std::string& rule) {
  if (!ok) bad(field, value, rule);
}

}  // namespace

void validate(const SimConfig& c) {
  require(c.dt > 0 && std::isfinite(c.dt), "sim.dt", c.dt, "must be > 0");
  require(c.action_repeat >= 1, "sim.action_repeat", c.action_repeat, "must be >= 1");
  require(c.horizon_env_steps >= 1, "sim.horizon_env_steps", c.horizon_env_steps,
          "must be >= 1");
  require(c.v_lo >= 0 && c.v_lo < c.v_hi, "sim.speed_bounds", c.v_lo,
          "need 0 <= v_lo < v_hi");
  require(c.a_lo < 0 && c.a_lo < c.a_hi, "sim.accel_bounds", c.a_lo,
          "need a_lo < 0 and a_lo < a_hi");
  if (c.platoon_layout.size() < 2 ||
      c.platoon_layout.front() != VehicleKind::TrajectoryLeader) {
    throw ConfigError("sim.platoon", "layout must start with a leader and have followers");
  }
  for (std::size_t i = 1; i < c.platoon_layout.size(); ++i) {
    if (c.platoon_layout[i] == VehicleKind::TrajectoryLeader) {
      throw ConfigError("sim.platoon", "only the first vehicle may be a leader");
    }
  }

  const auto& p = c.idm;
  require(p.v0 > 0, "idm.v0", p.v0, "must be > 0");
  require(p.time_headway > 0, "idm.T", p.time_headway, "must be > 0");
  require(p.jam_distance > 0, "idm.s0", p.jam_distance, "must be > 0");
  require(p.max_accel > 0, "idm.a_max", p.max_accel, "must be > 0");
  require(p.comfort_decel > 0, "idm.b", p.comfort_decel, "must be > 0");
  require(p.delta >= 1, "idm.delta", p.delta, "must be >= 1");

  const auto& e = c.energy;
  require(e.idle_floor >= 0, "energy.idle_floor", e.idle_floor, "must be >= 0");
  for (std::size_t i = 0; i < e.coeffs.size(); ++i) {
    require(std::isfinite(e.coeffs[i]), "energy.coeffs[" + std::to_string(i) + "]",
            e.coeffs[i], "must be finite");
  }

  const auto& lc = c.lane_change;
  require(lc.gap_ratio_sigma > 0, "lane_change.gap_ratio_sigma", lc.gap_ratio_sigma,
          "must be > 0");
  require(lc.ratio_lo > 0 && lc.ratio_lo < lc.ratio_hi && lc.ratio_hi < 1,
          "lane_change.ratio_clip", lc.ratio_lo, "need 0 < lo < hi < 1");
  require(lc.min_insert_gap >= p.jam_distance, "lane_change.min_insert_gap",
          lc.min_insert_gap, "must be >= idm.s0");
  require(lc.max_follower_decel >= 0, "lane_change.max_follower_decel", lc.max_follower_decel,
          "must be >= 0");
  if (lc.cut_in.empty()) throw ConfigError("lane_change.cut_in", "needs at least one piece");
  if (lc.cut_out.empty()) throw ConfigError("lane_change.cut_out", "needs at least one piece");
  for (std::size_t i = 0; i < lc.cut_in.size(); ++i) {
    const auto& piece = lc.cut_in[i];
    const bool contiguous = i == 0 || piece.h_lo == lc.cut_in[i - 1].h_hi;
    require(piece.h_lo < piece.h_hi && contiguous,
            "lane_change.cut_in[" + std::to_string(i) + "].h_lo", piece.h_lo,
            "pieces must be ordered, contiguous and non-empty");
  }
  for (std::size_t i = 0; i < lc.cut_out.size(); ++i) {
    const auto& piece = lc.cut_out[i];
    const bool contiguous = i == 0 || piece.v_lo == lc.cut_out[i - 1].v_hi;
    require(piece.v_lo < piece.v_hi && contiguous,
            "lane_change.cut_out[" + std::to_string(i) + "].v_lo", piece.v_lo,
            "pieces must be ordered, contiguous and non-empty");
  }

  const auto& pl = c.planner;
  require(pl.bandwidth > 0, "planner.bandwidth", pl.bandwidth, "must be > 0");
  require(pl.segment_length > 0, "planner.segment_length", pl.segment_length, "must be > 0");
  require(pl.delay >= 0, "planner.delay", pl.delay, "must be >= 0");
  require(pl.update_interval > 0, "planner.update_interval", pl.update_interval,
          "must be > 0");
  require(pl.knot_spacing > 0, "planner.knot_spacing", pl.knot_spacing, "must be > 0");

  const auto& r = c.reward;
  require(r.c1 >= 0, "reward.c1", r.c1, "must be >= 0");
  require(r.c2 >= 0, "reward.c2", r.c2, "must be >= 0");
  require(r.c3 >= 0, "reward.c3", r.c3, "must be >= 0");
  require(r.c4 >= 0, "reward.c4", r.c4, "must be >= 0");
  require(r.platoon_size_n >= 1, "reward.platoon_size_n", r.platoon_size_n, "must be >= 1");

  const auto& t = c.train;
  require(t.gamma > 0 && t.gamma <= 1, "train.gamma", t.gamma, "must be in (0, 1]");
  require(t.gae_lambda > 0 && t.gae_lambda <= 1, "train.gae_lambda", t.gae_lambda,
          "must be in (0, 1]");
  require(t.clip_eps > 0, "train.clip_eps", t.clip_eps, "must be > 0");
  require(t.lr >= 0, "train.lr", t.lr, "must be >= 0");
  require(t.epochs_per_iter >= 1, "train.epochs_per_iter", t.epochs_per_iter, "must be >= 1");
  require(t.iterations >= 0, "train.iterations", t.iterations, "must be >= 0");
  require(t.batch_size >= 1, "train.batch_size", t.batch_size, "must be >= 1");
  require(t.minibatch_size >= 1 && t.minibatch_size <= t.batch_size,
          "train.minibatch_size", t.minibatch_size, "must be in [1, batch_size]");
  require(t.value_coeff >= 0, "train.value_coeff", t.value_coeff, "must be >= 0");
  require(t.entropy_coeff >= 0, "train.entropy_coeff", t.entropy_coeff, "must be >= 0");
  require(t.max_grad_norm >= 0, "train.max_grad_norm", t.max_grad_norm,
          "must be >= 0 (0 disables clipping)");
  require(t.checkpoint_every >= 1, "train.checkpoint_every", t.checkpoint_every,
          "must be >= 1");
  require(t.jobs >= 1, "train.jobs", t.jobs, "must be >= 1");
}

SimConfig parse_config(const std::string& yaml_text, const std::vector<std::string>& overrides) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ConfigError("", std::string("YAML parse error: ") + e.what());
  }
  if (!root || root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
  for (const auto& o : overrides) apply_override(root, o);
  SimConfig config = from_node(root);
  validate(config);
  return config;
}

SimConfig load_config(const std::string& path) { return load_config(path, {}); }

SimConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), overrides);
}

std::string serialize_config(const SimConfig& c) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "seed" << YAML::Value << c.seed;

  out << YAML::Key << "sim" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "dt" << YAML::Value << c.dt;
  out << YAML::Key << "action_repeat" << YAML::Value << c.action_repeat;
  out << YAML::Key << "horizon_env_steps" << YAML::Value << c.horizon_env_steps;
  out << YAML::Key << "speed_bounds" << YAML::Value << YAML::Flow
      << std::vector<double>{c.v_lo, c.v_hi};
  out << YAML::Key << "accel_bounds" << YAML::Value << YAML::Flow
      << std::vector<double>{c.a_lo, c.a_hi};
  out << YAML::Key << "platoon" << YAML::Value << YAML::Flow << layout_tokens(c.platoon_layout);
  out << YAML::EndMap;

  out << YAML::Key << "idm" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "v0" << YAML::Value << c.idm.v0;
  out << YAML::Key << "T" << YAML::Value << c.idm.time_headway;
  out << YAML::Key << "s0" << YAML::Value << c.idm.jam_distance;
  out << YAML::Key << "a_max" << YAML::Value << c.idm.max_accel;
  out << YAML::Key << "b" << YAML::Value << c.idm.comfort_decel;
  out << YAML::Key << "delta" << YAML::Value << c.idm.delta;
  out << YAML::EndMap;

  out << YAML::Key << "energy" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "coeffs" << YAML::Value << YAML::Flow
      << std::vector<double>(c.energy.coeffs.begin(), c.energy.coeffs.end());
  out << YAML::Key << "idle_floor" << YAML::Value << c.energy.idle_floor;
  out << YAML::EndMap;

  out << YAML::Key << "lane_change" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "cut_in" << YAML::Value << YAML::BeginSeq;
  for (const auto& piece : c.lane_change.cut_in) {
    out << YAML::Flow << YAML::BeginMap;
    out << YAML::Key << "h_lo" << YAML::Value << piece.h_lo;
    out << YAML::Key << "h_hi" << YAML::Value << piece.h_hi;
    out << YAML::Key << "coeffs" << YAML::Value
        << std::vector<double>(piece.coeffs.begin(), piece.coeffs.end());
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::Key << "cut_out" << YAML::Value << YAML::BeginSeq;
  for (const auto& piece : c.lane_change.cut_out) {
    out << YAML::Flow << YAML::BeginMap;
    out << YAML::Key << "v_lo" << YAML::Value << piece.v_lo;
    out << YAML::Key << "v_hi" << YAML::Value << piece.v_hi;
    out << YAML::Key << "coeffs" << YAML::Value
        << std::vector<double>(piece.coeffs.begin(), piece.coeffs.end());
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::Key << "gap_ratio_mu" << YAML::Value << c.lane_change.gap_ratio_mu;
  out << YAML::Key << "gap_ratio_sigma" << YAML::Value << c.lane_change.gap_ratio_sigma;
  out << YAML::Key << "ratio_clip" << YAML::Value << YAML::Flow
      << std::vector<double>{c.lane_change.ratio_lo, c.lane_change.ratio_hi};
  out << YAML::Key << "min_insert_gap" << YAML::Value << c.lane_change.min_insert_gap;
  out << YAML::Key << "max_follower_decel" << YAML::Value << c.lane_change.max_follower_decel;
  out << YAML::EndMap;

  out << YAML::Key << "planner" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "enabled" << YAML::Value << c.planner.enabled;
  out << YAML::Key << "bandwidth" << YAML::Value << c.planner.bandwidth;
  out << YAML::Key << "segment_length" << YAML::Value << c.planner.segment_length;
  out << YAML::Key << "delay" << YAML::Value << c.planner.delay;
  out << YAML::Key << "update_interval" << YAML::Value << c.planner.update_interval;
  out << YAML::Key << "knot_spacing" << YAML::Value << c.planner.knot_spacing;
  out << YAML::EndMap;

  out << YAML::Key << "reward" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "c1" << YAML::Value << c.reward.c1;
  out << YAML::Key << "c2" << YAML::Value << c.reward.c2;
  out << YAML::Key << "c3" << YAML::Value << c.reward.c3;
  out << YAML::Key << "c4" << YAML::Value << c.reward.c4;
  out << YAML::Key << "platoon_size_n" << YAML::Value << c.reward.platoon_size_n;
  out << YAML::EndMap;

  const auto& t = c.train;
  out << YAML::Key << "train" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "gamma" << YAML::Value << t.gamma;
  out << YAML::Key << "gae_lambda" << YAML::Value << t.gae_lambda;
  out << YAML::Key << "clip_eps" << YAML::Value << t.clip_eps;
  out << YAML::Key << "lr" << YAML::Value << t.lr;
  out << YAML::Key << "epochs_per_iter" << YAML::Value << t.epochs_per_iter;
  out << YAML::Key << "iterations" << YAML::Value << t.iterations;
  out << YAML::Key << "batch_size" << YAML::Value << t.batch_size;
  out << YAML::Key << "minibatch_size" << YAML::Value << t.minibatch_size;
  out << YAML::Key << "value_coeff" << YAML::Value << t.value_coeff;
  out << YAML::Key << "entropy_coeff" << YAML::Value << t.entropy_coeff;
  out << YAML::Key << "max_grad_norm" << YAML::Value << t.max_grad_norm;
  out << YAML::Key << "log_std_init" << YAML::Value << t.log_std_init;
  out << YAML::Key << "clip_value_loss" << YAML::Value << t.clip_value_loss;
  out << YAML::Key << "checkpoint_every" << YAML::Value << t.checkpoint_every;
  out << YAML::Key << "jobs" << YAML::Value << t.jobs;
  out << YAML::Key << "trajectories" << YAML::Value << t.trajectories;
  out << YAML::EndMap;

  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

std::string config_hash(const SimConfig& config) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : serialize_config(config)) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace wavesmooth
