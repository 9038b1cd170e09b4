#pragma once

#include "pppa/sym_matrix.hpp"
#include "pppa/types.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace pppa {

/// minimize q'x + x'Mx/2 subject to 0 <= x <= u, u_i in (0, inf].
struct QpInstance {
  SymMatrix m;
  Vector q;
  Vector u;

  Index size() const noexcept { return m.size(); }
  /// Throws InvalidArgument on shape mismatch, NaN data or u_i <= 0.
  void validate() const;
  double objective(const Vector& x) const;
  bool all_bounds_finite() const;
};

enum class SolveStatus { Optimal, Unbounded, Error };

const char* to_string(SolveStatus status);

struct SolveStats {
  Index pivots = 0;
  Index two_by_two_pivots = 0;
  std::int64_t flops = 0;
  Index refactorizations = 0;
  Index subproblems = 0;
  Index reductions = 0;
};

/// Direction d >= 0 with Md = 0 and q'd < 0, supported where u is infinite.
struct Ray {
  Vector direction;
  Index entering = -1;  // entering index of the pivot that exposed the ray, if any
};

struct SolveOutcome {
  SolveStatus status = SolveStatus::Error;
  std::optional<Vector> x;
  std::optional<double> objective;
  std::optional<Ray> ray;
  SolveStats stats;
  std::optional<ErrorKind> error;
  std::string message;

  static SolveOutcome optimal(const QpInstance& inst, Vector x, SolveStats stats = {});
  static SolveOutcome unbounded(Ray ray, SolveStats stats = {});
  static SolveOutcome failure(ErrorKind kind, std::string message, SolveStats stats = {});
};

}  // namespace pppa
