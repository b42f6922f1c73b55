#pragma once

namespace cogtools::cli {

// Full command-line surface; returns the process exit code.
// 0 ok, 1 partial failure, 2 usage/config error, 3 fatal backend error.
int run(int argc, const char* const* argv);

}  // namespace cogtools::cli
