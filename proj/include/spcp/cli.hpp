#pragma once

#include <string>
#include <vector>

namespace spcp {

/// Subcommands fit, predict, diagnose, simulate, study and heatmap. Returns 0
/// on success, 1 for bad input (unknown flags, malformed files) and 2 for
/// numerical failures.
int cli_main(int argc, char** argv);

/// Same, with args excluding the program name.
int cli_main(const std::vector<std::string>& args);

}  // namespace spcp
