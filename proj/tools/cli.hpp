#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "latentface/generator.hpp"
#include "latentface/run_config.hpp"

namespace latentface::cli {

/// Result of parsing a command line. `exit_code` is set when parsing alone
/// settles the outcome (help output or a usage error); `output` then holds
/// the text to print.
struct Invocation {
  std::string subcommand;
  Command command = Command::manipulate;
  RunConfig config;
  ReferenceGeneratorConfig reference; // init-reference only
  std::filesystem::path init_dir;     // init-reference only
  int exit_code = -1;
  std::string output;
};

/// Precedence, lowest first: built-in defaults, `--config` file, flags.
Invocation parse(const std::vector<std::string>& args);

// Parses and runs; `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace latentface::cli
