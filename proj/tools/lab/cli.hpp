#pragma once

#include "ctlab/error.hpp"

#include <string>
#include <vector>

namespace lab {

/// 2 for configuration and artifact problems, 3 for numerical failures.
int exit_code(ctlab::ErrorKind kind);

/// Runs the `lab` command line. args excludes the program name.
int run_cli(const std::vector<std::string>& args);

}  // namespace lab
