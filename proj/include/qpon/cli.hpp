#pragma once

#include <string>
#include <vector>

namespace qpon {

/// Runs the command-line front end. Exit codes: 0 success, 1 domain error
/// (invalid topology/scenario, no-key, unknown terminals), 2 I/O or usage.
int run_cli(const std::vector<std::string>& args);

}  // namespace qpon
