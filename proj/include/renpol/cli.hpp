#pragma once

// Command-line front end. Exit codes: 0 success, 1 invalid input (bad flags,
// malformed files, dimension mismatch), 2 runtime failure.

#include <iosfwd>

namespace renpol::cli {

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace renpol::cli
