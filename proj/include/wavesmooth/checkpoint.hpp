#pragma once

#include <cstdint>
#include <string>

#include "wavesmooth/policy.hpp"

namespace wavesmooth::control {

inline constexpr char kCheckpointMagic[8] = {'W', 'S', 'P', 'O', 'L', 'I', 'C', 'Y'};
inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::uint32_t kFlagPlannerObs = 1u;

/// Binary layout (all little-endian), see docs/checkpoint_format.md:
///   magic[8] | u32 version | u32 flags
///   u32 n_actor | u32 actor_sizes[n_actor]
///   u32 n_value | u32 value_sizes[n_value]
///   f64 log_std | f64 actor[...] | f64 value[...]
/// Each network's parameters are, per layer, W row-major then b.
void save_checkpoint(const PolicyParameters& params, const std::string& path);

/// Throws DataError on bad magic, version, layer shapes or truncation.
PolicyParameters load_checkpoint(const std::string& path);

/// Human-readable dump of every parameter, one value per line, for audit.
void export_text(const PolicyParameters& params, const std::string& path);

}  // namespace wavesmooth::control
