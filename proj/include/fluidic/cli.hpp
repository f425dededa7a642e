#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace fluidic {

/// Runs one `fluidic` invocation; `args` excludes the program name.
/// Returns 0 on success, 1 on a verification or logic failure, 2 on a usage or
/// parse error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fluidic
