#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fairrank::cli {

enum ExitCode : int {
  kSuccess = 0,
  kUsage = 1,
  kDataError = 2,
};

// Runs the command line. args[0] is the program name. Normal output goes to
// `out`; diagnostics and warnings go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace fairrank::cli
