#pragma once

#include <string>
#include <vector>

namespace traceqa {

// Full command-line entry point. Returns the process exit code:
// 0 success, 1 usage, 2 data/validation, 3 responder protocol.
// Diagnostics go to stderr; data goes to files or stdout.
int dispatch(const std::vector<std::string>& args);
int dispatch(int argc, const char* const* argv);

}  // namespace traceqa
