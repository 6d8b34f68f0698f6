#pragma once

#include <iostream>
#include <string>
#include <vector>

namespace planforge {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntimeError = 1;
inline constexpr int kExitUsageError = 2;

/// Runs one command line. `args` excludes the program name. Returns 0 on
/// success, 1 on a runtime error and 2 on a usage error (synopsis on `err`).
int execute(const std::vector<std::string>& args, std::ostream& out = std::cout,
            std::ostream& err = std::cerr);

}  // namespace planforge
