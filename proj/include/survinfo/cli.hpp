#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace survinfo::cli {

// Exit statuses.
inline constexpr int kOk = 0;
inline constexpr int kUsageError = 1;
inline constexpr int kNumericalError = 2;

// Runs one command. `args` excludes the program name. Results go to `out`,
// diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace survinfo::cli
