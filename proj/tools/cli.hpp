#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace recur::cli {

inline constexpr int kSchemaVersion = 1;

/// Runs one subcommand. `args` excludes the program name. Returns 0 on
/// success, 2 for invalid configuration and 3 when a runtime guard refuses
/// the request.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace recur::cli
