#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qarena {

enum ExitCode : int { kExitOk = 0, kExitInvalid = 2, kExitCapExceeded = 3 };

// Entry point of the qarena tool. args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Turns "key=value" lines into "--key value" arguments. Blank lines and lines
// starting with '#' are skipped. Throws Error("bad_config") on malformed lines.
std::vector<std::string> config_arguments(const std::string& text);

}  // namespace qarena
