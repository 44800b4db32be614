#pragma once

#include <iosfwd>

namespace mlsent::cli {

// Entry point shared by the binary and the tests. Returns the process exit
// code: 0 ok, 2 validation/argument error, 3 runtime or stage failure.
int run_cli(int argc, const char* const* argv);
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mlsent::cli
