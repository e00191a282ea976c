#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tsiv::cli {

// Exit codes shared by every command.
enum Exit : int {
  kOk = 0,
  kFailure = 1,       // anything not covered below
  kSchema = 2,        // malformed input, bad flags, invalid config
  kDegenerate = 3,    // singular moments, no compliers, no matches
  kLdNotPsd = 4,
  kMonotonicity = 5,  // defiers present under --strict
};

// Runs one command; `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tsiv::cli
