#pragma once

#include <iosfwd>

namespace cascade::cli {

/// Parse argv and run one subcommand. Output goes to files under --out, or to
/// `out` when --out is absent; messages go to `err`.
/// Exit codes: 0 success, 1 invalid input, 2 numerical failure.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cascade::cli
