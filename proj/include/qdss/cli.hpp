#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace qdss {

/// Runs one `qdss` invocation. `args` excludes the program name.
/// Exit codes: 0 success, 1 usage or validation failure, 2 I/O failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qdss
