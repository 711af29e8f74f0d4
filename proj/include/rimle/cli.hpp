#pragma once

#include <iostream>
#include <string>
#include <vector>

namespace rimle::cli {

/// Exit status conventions: 0 success, 1 runtime failure (diagnostic names
/// the failing stage), 2 usage error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Runs one invocation: args are the tokens after the program name, e.g.
/// {"fit", "--input", "data.csv", ...}. All output goes to the supplied
/// streams so invocations can be driven in-process.
int run(const std::vector<std::string>& args, std::ostream& out = std::cout,
        std::ostream& err = std::cerr);

}  // namespace rimle::cli
