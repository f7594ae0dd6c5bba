#pragma once

// Command-line front end: configuration, overlap-table cache, and CSV/JSON
// result files for every experiment.

#include <string>
#include <vector>

#include "json.hpp"

namespace cauchy {

enum ExitCode : int { kExitOk = 0, kExitError = 1, kExitUsage = 2, kExitNeedsLongerTable = 3, kExitResource = 4 };

inline constexpr const char* kVersion = "1.0.0";

/// Defaults for a subcommand; every accepted key is present.
nlohmann::json default_config(const std::string& command);

/// Defaults, then the JSON file, then --seed and --set overrides. Unknown
/// keys raise InvalidParameter naming the key.
nlohmann::json resolve_config(const std::string& command, const std::string& config_path,
                              const std::vector<std::string>& overrides, const std::string& seed);

/// Hex FNV-1a of the canonical dump of `config`.
std::string config_fingerprint(const nlohmann::json& config);

struct CliContext {
  std::string out_dir = "out";
  std::string cache_dir;  // empty disables the overlap cache
  unsigned threads = 1;
};

/// Runs one subcommand and writes <out>/<command>.csv and .json.
void run_command(const std::string& command, const nlohmann::json& config, const CliContext& ctx);

/// Full entry point; returns the process exit code.
int cli_main(int argc, char** argv);

}  // namespace cauchy
