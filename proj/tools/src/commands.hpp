// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <iosfwd>
#include <span>
#include <string>

#include "run_config.hpp"

namespace vaxbayes::cli {

inline constexpr int kExitSuccess = 0;
inline constexpr int kExitNumerical = 1;
inline constexpr int kExitInput = 2;

/// Each command writes its artifacts under config.out_dir and progress lines
/// to `log`. Failures are reported as InputError or NumericalError.
void cmd_cluster(const RunConfig& config, std::ostream& log);
void cmd_fit(const RunConfig& config, std::ostream& log);
void cmd_simulate(const RunConfig& config, std::ostream& log);
void cmd_diagnose(const RunConfig& config, std::ostream& log);

/// Full command line entry point: parses flags, layers the config, runs the
/// subcommand, and maps failures to exit codes (0 ok, 1 numerical or model
/// failure, 2 input or configuration failure).
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace vaxbayes::cli
