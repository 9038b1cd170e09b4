#pragma once

#include "pppa/qp.hpp"

namespace pppa {

/// Primal point with its gradient slack w = q + Mx + lambda, upper-bound
/// multipliers lambda = max(-(q + Mx), 0) on finite bounds, and slacks s = u - x.
struct KktPoint {
  Vector x;
  Vector w;
  Vector lambda;
  Vector s;
};

KktPoint kkt_point(const QpInstance& inst, const Vector& x);

/// max of bound violations and |x_i - clip(x_i - g_i, 0, u_i)| with g = q + Mx.
/// Zero exactly at KKT points.
double kkt_residual(const QpInstance& inst, const Vector& x);

/// d >= 0, d_i = 0 where u_i is finite, Md = 0 and q'd < 0, all after scaling
/// d to unit max-norm. Tolerances scale with max|m_ii| and 1 + |q|_inf.
bool recession_check(const QpInstance& inst, const Vector& d, double tol = 1e-8);

enum class OracleStatus { Optimal, Unbounded, NoKktPoint };

struct OracleResult {
  OracleStatus status = OracleStatus::NoKktPoint;
  Vector x;
  double objective = 0.0;
  Vector ray;
  Index kkt_points = 0;
};

/// Brute force over the 3^n lower/upper/free assignments (n <= 10). Unbounded
/// problems are detected first from extreme rays of the cone
/// {d_I >= 0 : M_II d_I = 0} with I the infinitely bounded coordinates.
OracleResult enumerate_active_sets(const QpInstance& inst, double tol = 1e-9);

/// Turns an outcome that fails its own certificate into an Error outcome.
SolveOutcome certify(const QpInstance& inst, SolveOutcome outcome, const Tolerances& tol = {});

}  // namespace pppa
