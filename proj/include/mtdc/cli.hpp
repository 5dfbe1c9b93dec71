#pragma once

namespace mtdc {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;      // schema/unit/topology errors
inline constexpr int kExitConvergence = 3; // Newton/eigensolver/bisection failures
inline constexpr int kExitInfeasible = 4;  // unstable expansion point
inline constexpr int kExitMissing = 5;     // missing inputs for report
inline constexpr int kExitUsage = 64;

int cli_main(int argc, const char* const* argv);

} // namespace mtdc
