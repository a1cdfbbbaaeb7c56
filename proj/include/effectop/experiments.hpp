#pragma once

#include <string>

#include "effectop/config.hpp"

namespace effectop {

/// Executes the configured experiment, writes CSV/JSON outputs plus a run
/// manifest into out_dir.  Exit codes: 0 full success, 2 partial (flagged)
/// results, 1 error.
int run_experiment(const ExperimentConfig& config, const std::string& out_dir);

/// Parse + run; configuration and solver errors map to exit code 1 with a
/// message on stderr.
int run_config_file(const std::string& config_path, const std::string& out_dir);

/// Parse + validate only.
int validate_config_file(const std::string& config_path);

}  // namespace effectop
