#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hanslens::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kShape = 3,
  kData = 4,
  kOutputExists = 5,
  kNumerical = 6,
  kConfig = 7,
};

// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

}  // namespace hanslens::cli
