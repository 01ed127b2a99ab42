#pragma once

#include <ostream>

#include "semicomp_cli/run_config.hpp"

namespace semicomp::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumeric = 3;

// Executes cfg.command; console summaries go to `out`.
void run_command(const RunConfig& cfg, std::ostream& out);

// Parses argv, runs the subcommand and maps exceptions to exit codes.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace semicomp::cli
