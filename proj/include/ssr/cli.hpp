#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ssr/model.hpp"

namespace ssr::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitNumerical = 2;

/// Runs one subcommand; `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// SHA-256 of the canonical serialization, so formatting and comments in the
/// source file do not change it.
std::string config_hash(const SystemModel& model);

std::string version();

}  // namespace ssr::cli
