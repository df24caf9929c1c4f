#pragma once

#include <iosfwd>

namespace mlc::cli {

/// Parses argv, runs one verb and returns the process exit code:
/// 0 success, 1 usage/config/file error, 2 numeric failure.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mlc::cli
