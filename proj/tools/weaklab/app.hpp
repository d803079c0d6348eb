#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace weaklab::cli {

/// Runs one `weaklab` invocation. Errors are reported on `err` as a single
/// "error: <category>: <message>" line; the return value is the exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace weaklab::cli
