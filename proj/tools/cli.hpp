#pragma once

#include <string>
#include <vector>

namespace setgen::cli {

// Exit codes: 0 success, 1 runtime/IO failure or failed verification, 2 usage error.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);  // args[0] is the program name

}  // namespace setgen::cli
