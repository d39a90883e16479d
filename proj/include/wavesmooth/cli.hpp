#pragma once

namespace wavesmooth::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitFault = 2;

/// Entry point of the `wavesim` binary. Returns 0 on success, 1 on usage or
/// input errors, 2 on simulation faults.
int dispatch(int argc, char** argv);

}  // namespace wavesmooth::cli
