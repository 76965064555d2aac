#pragma once

namespace cewma {

// Parses and runs one command line. Exit codes: 0 success (monitor: no
// signal), 2 usage, 3 validation or I/O failure, 4 calibration did not
// converge, 5 monitor raised a signal.
int run_cli(int argc, const char* const* argv);

}  // namespace cewma
