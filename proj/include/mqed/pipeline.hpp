#pragma once

// Task runner behind the command-line tool.  Tasks run in the configured
// order and write their reports into the output directory:
//
//   decompose      decompose.json
//   modes          modes.json, <bank_file>, <bank_file>.json
//   verify         verify.json
//   ldos           ldos.csv
//   rate           rate.json
//   cavity-factor  cavity_factor.json

#include <filesystem>
#include <iosfwd>
#include <optional>

#include "mqed/config.hpp"

namespace mqed {

enum ExitCode : int {
  exit_ok = 0,
  exit_config = 2,     ///< schema, feasibility or I/O problem
  exit_solver = 3,     ///< an iterative solver failed
  exit_invariant = 4,  ///< the verify task found a violated invariant
};

struct RunOptions {
  std::optional<std::filesystem::path> out_dir;  ///< overrides the config
  int threads = 0;                               ///< <= 0 keeps the runtime default
  int verbosity = 1;                             ///< 0 quiet, 1 progress, 2 solver detail
};

/// Runs every task; returns an ExitCode.  Never throws.
int run_pipeline(const std::filesystem::path& config_path, const RunOptions& opts, std::ostream& log);
int run_pipeline(const RunConfig& cfg, const RunOptions& opts, std::ostream& log);

}  // namespace mqed
