#pragma once

#include <ostream>

namespace rbpn::cli {

// Entry point of the `rbpn` tool. Returns the process exit code:
// 0 success, 1 usage error, 2 data/layout error, 3 numeric failure.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rbpn::cli
