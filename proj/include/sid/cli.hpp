#pragma once

#include <iostream>
#include <string>
#include <vector>

namespace sid {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitValidation = 3;

/// Runs one `sid` invocation. argv[0] is the program name. Failures print a
/// one-line JSON error record to `err` and return a nonzero status.
int run_command(const std::vector<std::string>& argv, std::ostream& out = std::cout,
                std::ostream& err = std::cerr);

}  // namespace sid
