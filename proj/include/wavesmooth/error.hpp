#pragma once

#include <stdexcept>
#include <string>

namespace wavesmooth {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or unparseable configuration. `field()` names the dotted key.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message)
      : Error(field.empty() ? message : field + ": " + message),
        field_(std::move(field)) {}

  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class DataError : public Error {
 public:
  using Error::Error;
};

/// Raised when a gap becomes non-positive during integration.
class CollisionFault : public Error {
 public:
  CollisionFault(int follower_id, int leader_id, long step, double gap)
      : Error("collision at step " + std::to_string(step) + ": vehicle " +
              std::to_string(follower_id) + " hit vehicle " +
              std::to_string(leader_id) + " (gap " + std::to_string(gap) +
              " m)"),
        follower_id_(follower_id),
        leader_id_(leader_id),
        step_(step) {}

  int follower_id() const { return follower_id_; }
  int leader_id() const { return leader_id_; }
  long step() const { return step_; }

 private:
  int follower_id_;
  int leader_id_;
  long step_;
};

/// Non-finite value in a network forward pass, gradient or PPO ratio.
class NumericFault : public Error {
 public:
  NumericFault(const std::string& what, long index)
      : Error(what + " (index " + std::to_string(index) + ")"), index_(index) {}

  long index() const { return index_; }

 private:
  long index_;
};

}  // namespace wavesmooth
