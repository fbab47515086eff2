#pragma once

#include <ostream>

namespace synthvol {

// Exit codes of the command-line tool.
enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,
    kExitConfig = 2,
    kExitInput = 3,
    kExitShape = 4,
};

// Entry point of the `synthvol` tool; never throws.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace synthvol
