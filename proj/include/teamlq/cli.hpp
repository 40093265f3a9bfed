#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace teamlq {

/// Command-line overrides layered on top of the JSON config document.
struct CliOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out_dir;
};

/// Parses the config, dispatches the subcommand, writes outputs under the
/// out directory, and prints one summary line per output file.
/// Exit status: 0 success, 1 config error, 2 numeric failure.
int run(const CliOptions& options);

}  // namespace teamlq
