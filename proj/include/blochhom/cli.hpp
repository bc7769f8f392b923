#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace blochhom {

inline constexpr const char* kVersion = "0.1.0";

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitInput = 2 };

struct CliRequest {
  std::string command;  // bands, critical, correctors, effective, simulate, verify
  std::string config_text;
  std::string out_dir;  // empty: the config's `output` key
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

/// Runs one pipeline stage, writing manifest.json and CSV artifacts into the
/// output directory. Diagnostics go to `log`.
int dispatch(const CliRequest& request, std::ostream& log);

}  // namespace blochhom
