#pragma once

#include <iosfwd>

namespace coxscreen {

/// Process exit codes of the command-line front end.
enum ExitCode : int {
    exit_ok = 0,
    exit_runtime_failure = 1,    // fit, screening, or I/O failure
    exit_invalid_input = 2,      // bad flags, malformed files, invalid parameters
};

/**
 * Entry point of the `coxscreen` tool (subcommands fit, screen, simulate,
 * bench, oracle-t). Normal output goes to `out`, diagnostics to `err`.
 * Returns one of the ExitCode values.
 */
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace coxscreen
