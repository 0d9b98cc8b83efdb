#pragma once

namespace qdeq::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitDiverged = 2;

/// Subcommands: train, eval, verify-bounds, export-plot-data.
int run(int argc, char** argv);

}  // namespace qdeq::cli
