#pragma once

#include <iosfwd>

namespace cogload::cli {

/// Exit codes: 0 success, 1 usage error, 2 data error, 3 internal invariant breach.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitInternal = 3;

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cogload::cli
