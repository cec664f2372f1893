#pragma once

#include <ostream>

namespace phylograd::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitInternal = 4;

// Entry point shared by the executable and the in-process tests. argv[0] is
// the program name. Reports go to `out` unless --out names a file;
// diagnostics go to `err` as a single line.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace phylograd::cli
