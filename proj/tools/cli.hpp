#pragma once

// Command-line front end: argument parsing and the nine artifact commands.

#include <iosfwd>
#include <string>
#include <vector>

#include "ringtrap/io.hpp"

namespace ringtrap::cli {

/// Builds the configuration from argv: optional --config file first, then
/// every flag given on the command line on top of it. Throws ConfigError.
/// Returns false (after printing usage to `out`) when help was requested.
bool parse_arguments(int argc, const char* const* argv, RunConfig& cfg, std::ostream& out);

/// Runs one validated configuration and returns the paths written, primary
/// artifact first. Throws ConfigError, NumericalError or IoError.
std::vector<std::string> run(const RunConfig& cfg, std::ostream& log);

/// Full program: parse, run, map exceptions to exit codes with an error
/// JSON line on `err`.
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ringtrap::cli
