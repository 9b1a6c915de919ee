#pragma once

#include <string>
#include <vector>

namespace tbasis {

// Command-line front end (plan / init / fit / synth / conv / stats / verify).
// `args` excludes the program name. Returns the process exit code:
// 0 success, 1 validation or configuration error, 2 numerical failure.
int run_cli(const std::vector<std::string>& args);

}  // namespace tbasis
