#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace eegart::app {

// Exit codes of the `eegart` tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // runtime failure, port busy
inline constexpr int kExitInput = 2;    // bad arguments or unusable input
inline constexpr int kExitFormat = 3;   // corrupt or incompatible file

// Runs one command; args[0] is the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace eegart::app
