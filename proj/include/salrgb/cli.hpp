#pragma once

#include <iosfwd>
#include <span>
#include <string>

namespace salrgb::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitRuntime = 4;

// Subcommands: validate, saliency, train, eval, predict, report.
// args excludes the program name.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace salrgb::cli
