#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace driftqa::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// argv[0] is the program name. Diagnostics go to `err`, reports to `out`.
int dispatch(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

}  // namespace driftqa::cli
