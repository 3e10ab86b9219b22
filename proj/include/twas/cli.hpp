#pragma once

#include <iosfwd>

namespace twas::cli {

// Runs one subcommand. Returns 0 on success, 1 on a usage error and 2 when
// the input data are rejected. Requested output goes to `out` when the
// output path is "-"; diagnostics go to `err`.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace twas::cli
