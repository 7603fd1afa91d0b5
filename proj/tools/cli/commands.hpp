#pragma once

namespace dfsmem::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

/// Parses the command line and runs one subcommand. Returns the exit code.
int run(int argc, char** argv);

}  // namespace dfsmem::cli
