#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace contact_kam::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kConfig = 2, kNumerical = 3, kPrecondition = 4 };

/// Runs one command; `args` excludes the program name. Summary lines go to `out`, notices and errors to `err`.
int execute(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace contact_kam::cli
