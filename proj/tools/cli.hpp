#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace spellscope::cli {

/// Runs one command line (args excludes the program name) and returns the
/// process exit code: 0 ok, 2 I/O, 3 config, 4 backend, 5 data format.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace spellscope::cli
