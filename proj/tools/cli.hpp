#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace reltie::cli {

enum ExitCode : int { ok = 0, usage = 1, data_error = 2, not_converged = 3 };

/// Runs one subcommand; args excludes the program name.
int run(std::vector<std::string> const& args, std::ostream& out, std::ostream& err);

} // namespace reltie::cli
