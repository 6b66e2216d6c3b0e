#pragma once

#include <string>
#include <vector>

namespace qlab::cli {

// Full command-line driver, callable in-process (args exclude the
// program name). Returns the process exit code: 0 success, 2 config
// error (bad flags, unreadable or malformed inputs), 3 precondition
// violation, 4 internal invariant failure. Output files are staged and
// committed atomically; on error no partial outputs remain.
int run_cli(const std::vector<std::string>& args);

}  // namespace qlab::cli
