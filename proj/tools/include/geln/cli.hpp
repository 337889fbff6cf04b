#pragma once

namespace geln::cli {

/// Parse argv, run the selected subcommand, write artifacts under --out.
/// Exit codes: 0 success, 1 validation error, 2 I/O error.
int dispatch(int argc, const char* const* argv);

}  // namespace geln::cli
