#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lilchain::cli {

/// Exit codes: 0 success, 2 invalid chain spec, 3 numeric failure, 4 bad config.
enum ExitCode : int { kOk = 0, kSpecInvalid = 2, kNumeric = 3, kConfig = 4 };

/// Entry point shared by the executable and the tests. args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lilchain::cli
