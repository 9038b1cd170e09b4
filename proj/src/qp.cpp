#include "pppa/qp.hpp"

#include <cmath>

namespace pppa {

void QpInstance::validate() const {
  const Index n = m.size();
  if (q.size() != n || u.size() != n) throw Error(ErrorKind::InvalidArgument, "q and u must have length n");
  for (Index i = 0; i < n; ++i) {
    if (!std::isfinite(q(i))) throw Error(ErrorKind::InvalidArgument, "q has a non-finite entry");
    if (std::isnan(u(i)) || !(u(i) > 0.0)) throw Error(ErrorKind::InvalidArgument, "upper bounds must be positive");
    for (Index j = std::max<Index>(0, i - 1); j <= i; ++j) {
      if (!std::isfinite(m(i, j))) throw Error(ErrorKind::InvalidArgument, "M has a non-finite entry");
    }
  }
  if (!m.is_tridiagonal() && !m.dense_ref().allFinite()) {
    throw Error(ErrorKind::InvalidArgument, "M has a non-finite entry");
  }
}

double QpInstance::objective(const Vector& x) const { return q.dot(x) + 0.5 * m.quadratic_form(x); }

bool QpInstance::all_bounds_finite() const { return u.allFinite(); }

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::Error: return "error";
  }
  return "error";
}

SolveOutcome SolveOutcome::optimal(const QpInstance& inst, Vector x, SolveStats stats) {
  SolveOutcome o;
  o.status = SolveStatus::Optimal;
  o.objective = inst.objective(x);
  o.x = std::move(x);
  o.stats = stats;
  return o;
}

SolveOutcome SolveOutcome::unbounded(Ray ray, SolveStats stats) {
  SolveOutcome o;
  o.status = SolveStatus::Unbounded;
  o.ray = std::move(ray);
  o.stats = stats;
  return o;
}

SolveOutcome SolveOutcome::failure(ErrorKind kind, std::string message, SolveStats stats) {
  SolveOutcome o;
  o.status = SolveStatus::Error;
  o.error = kind;
  o.message = std::move(message);
  o.stats = stats;
  return o;
}

}  // namespace pppa
