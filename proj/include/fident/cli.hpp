#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fident::cli {

enum ExitCode : int { kPass = 0, kFail = 1, kInputError = 2 };

/// Runs `fident <command> ...` with args excluding the program name.
/// Never throws; every failure maps to an exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fident::cli
