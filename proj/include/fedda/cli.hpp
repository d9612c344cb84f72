#pragma once

#include <string>
#include <vector>

namespace fedda {

// The command-line front end; argv-style arguments without the program name.
// Returns the process exit status.
int run_cli(const std::vector<std::string>& args);

}  // namespace fedda
