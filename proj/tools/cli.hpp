#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace e2x::cli {

/// Entry point of the `e2x` tool. Returns 0 on success, 1 on a validation
/// error (bad flags, config or inputs), 2 when a computation fails.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace e2x::cli
