#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace abl::cli {

// Exit statuses.
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;     // ERR response, usage or config error
inline constexpr int kUnreachable = 2; // admin port not reachable

// abl serve | bl list|add|del | stats | simulate <scenario> [--out file]
int run(std::vector<std::string> const& args, std::ostream& out, std::ostream& err);

}  // namespace abl::cli
