#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cde::cli {

// Parses and dispatches one invocation (argv without the program name).
// Returns 0 on successful evaluation, 2 on usage/parse/input errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cde::cli
