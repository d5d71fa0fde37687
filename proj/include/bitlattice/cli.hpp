#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace bitlattice::cli {

inline constexpr std::string_view kVersion = "0.1.0";

/// Runs one subcommand. `args` excludes the program name. Returns 0 on
/// success, 2 on invalid input, 1 when a valid input cannot be computed.
/// Files named by --output style flags are written only on success.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bitlattice::cli
