#pragma once

#include <string>
#include <vector>

namespace tabrep {

// Entry point shared by the binary and the tests. Returns the process exit
// code; errors are reported as one-line JSON on stderr.
int run_cli(const std::vector<std::string>& args);
int run_cli(int argc, char** argv);

}  // namespace tabrep
