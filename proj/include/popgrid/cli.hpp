#pragma once

#include <string>
#include <vector>

namespace popgrid::cli {

// Parse and dispatch one command. Exit codes: 0 success, 1 usage error,
// 2 data error, 3 numeric failure.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);  // args without the program name

}  // namespace popgrid::cli
