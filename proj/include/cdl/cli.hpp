#pragma once

#include <string>
#include <vector>

namespace cdl {

// Entry point of the command line tool; exposed as a library call so tests
// can drive subcommands in-process. args excludes the program name.
// Returns 0 on success, 2 for configuration/input errors, 3 for runtime
// failures.
int run_cli(const std::vector<std::string>& args);
int run_cli(int argc, char** argv);

}  // namespace cdl
