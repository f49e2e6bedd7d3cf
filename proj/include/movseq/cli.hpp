#pragma once

#include <iosfwd>

namespace movseq {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 2;
inline constexpr int kExitSearchLimit = 3;

// Entry point of the `movseq` tool; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace movseq
