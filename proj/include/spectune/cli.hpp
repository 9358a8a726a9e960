#ifndef SPECTUNE_CLI_HPP_
#define SPECTUNE_CLI_HPP_

#include <iosfwd>

namespace spectune {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvariant = 1;
inline constexpr int kExitConfig = 2;

// Entry point of the spectune binary; argv[0] is the program name. Artifacts
// go under --out (or $SPECTUNE_OUT_DIR); the one-line summary goes to `out`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace spectune

#endif  // SPECTUNE_CLI_HPP_
