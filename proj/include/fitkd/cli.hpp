#pragma once

#include <string>
#include <vector>

namespace fitkd {

// Entry point behind tools/main. `args` excludes the program name.
// Returns the process exit code: 0 on success; otherwise nonzero after a
// one-line "fitkd: error: ..." diagnostic on stderr (CLI usage errors print
// their own message).
int run_cli(std::vector<std::string> args);

}  // namespace fitkd
