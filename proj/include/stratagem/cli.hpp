#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace stratagem::cli {

/// Stable exit codes for scripting.
enum ExitCode : int {
    kOk = 0,
    kInputError = 2,
    kLlmError = 3,
    kLayoutError = 4,
};

/// Runs `stratagem <args...>` (args exclude the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace stratagem::cli
