#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace wikimarket::cli {

/// Runs one invocation. args[0] is the program name. Returns the exit code:
/// 0 ok, 1 runtime error, 2 usage error. `serve` blocks until SIGINT/SIGTERM.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace wikimarket::cli
