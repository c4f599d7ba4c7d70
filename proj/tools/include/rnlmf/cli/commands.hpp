#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace rnlmf::cli {

/// Exit codes of run_command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;  ///< bad arguments or I/O failure
inline constexpr int kExitNumeric = 2;

/// Parses `key = value` lines; `#` starts a comment. Underscores in keys are
/// normalized to dashes so keys match long option names.
std::map<std::string, std::string> parse_config_text(const std::string& text, const std::string& source);

/// Splices `--key=value` tokens from a `--config FILE` argument in front of the
/// user's own options, so command-line flags override file values.
std::vector<std::string> expand_config_file(const std::vector<std::string>& args);

/// Entry point shared by the executable and the tests. args[0] is the program name.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rnlmf::cli
