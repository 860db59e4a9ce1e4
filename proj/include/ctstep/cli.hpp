#pragma once

namespace ctstep {

/// Entry point of the command-line tool.  Exit codes: 0 success, 2 usage or
/// configuration error, 3 numeric failure, 4 a --check threshold missed.
int run_cli(int argc, const char* const* argv);

} // namespace ctstep
