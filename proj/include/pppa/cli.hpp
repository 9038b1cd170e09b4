#pragma once

#include "pppa/types.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace pppa::cli {

/// Exit codes of run_command.
inline constexpr int kExitOptimal = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitUnbounded = 2;
inline constexpr int kExitUsage = 64;

inline constexpr const char* kBenchHeader = "n,rho,seed,status,pivots,two_by_two_pivots,time_ms,kkt_residual";

/// Either a single number, which sets the kkt and cert tolerances, or a
/// comma-separated list of name=value pairs over the Tolerances fields.
Tolerances parse_tolerances(const std::string& text, Tolerances base = {});

/// Defaults, overridden by the PPPA_TOL environment variable when set.
Tolerances default_tolerances();

/// `args` excludes the program name.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pppa::cli
