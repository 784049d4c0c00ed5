#pragma once

#include <iosfwd>

namespace planar {

// Runs the planar_measure command line. Returns 0 on success, 1 on a domain
// error and 2 on a usage error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace planar
