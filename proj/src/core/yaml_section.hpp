#pragma once

#include <yaml-cpp/yaml.h>

#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "wavesmooth/error.hpp"

namespace wavesmooth::detail {

// Walks one YAML mapping, remembering which keys were read so that leftovers
// can be reported as unknown.
class Section {
 public:
  Section(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {
    if (node_ && !node_.IsNull() && !node_.IsMap()) {
      throw ConfigError(path_.empty() ? "<root>" : path_, "expected a mapping");
    }
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    if (!node_ || !node_.IsMap()) return;
    const YAML::Node& map = node_;
    if (!map[key]) return;
    try {
      out = node_[key].template as<T>();
    } catch (const YAML::Exception&) {
      throw ConfigError(field(key), "cannot parse value '" + scalar(key) + "'");
    }
  }

  void read_pair(const char* key, double& lo, double& hi) {
    std::vector<double> v{lo, hi};
    read(key, v);
    if (v.size() != 2) throw ConfigError(field(key), "expected [lo, hi]");
    lo = v[0];
    hi = v[1];
  }

  YAML::Node child(const char* key) {
    seen_.insert(key);
    if (!node_ || !node_.IsMap()) return undefined();
    const YAML::Node& map = node_;
    return map[key];
  }

  std::string field(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  void reject_unknown() const {
    if (!node_ || !node_.IsMap()) return;
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!seen_.count(key)) throw ConfigError(field(key), "unknown key");
    }
  }

 private:
  static YAML::Node undefined() {
    const YAML::Node empty(YAML::NodeType::Map);
    return empty["~"];
  }

  std::string scalar(const char* key) const {
    const auto n = node_[key];
    if (n.IsScalar()) return n.Scalar();
    std::ostringstream os;
    os << n;
    return os.str();
  }

  YAML::Node node_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace wavesmooth::detail
