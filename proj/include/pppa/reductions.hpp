#pragma once

#include "pppa/pivot_engine.hpp"
#include "pppa/qp.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace pppa {

enum class StepKind { Fix, Drop, Flip };

/// One reversible transformation. Indices refer to the problem the trace
/// was started on.
struct ReductionStep {
  StepKind kind = StepKind::Fix;
  Index index = -1;
  double value = 0.0;  // Fix: the fixed value; Flip: the finite bound u_i
  double pivot = 0.0;  // Drop: m_ii
  double qi = 0.0;     // Drop: q_i
  std::vector<std::pair<Index, double>> row;  // Drop: nonzero m_ik of the remaining variables
};

/// Steps applied in order; `ids` maps each variable of the current reduced
/// problem to its index in the original problem.
struct ReductionTrace {
  Index original_n = 0;
  IndexSet ids;
  std::vector<ReductionStep> steps;

  explicit ReductionTrace(Index n = 0);
  /// Records a step given in the reduced problem's local indices and updates ids.
  void push(ReductionStep local);
  Vector replay_solution(const Vector& reduced_x) const;
  Vector replay_ray(const Vector& reduced_ray) const;
};

struct ZeroDiagResult {
  QpInstance instance;
  ReductionTrace trace;
  std::optional<Vector> ray;  // set when a zero-diagonal variable makes the problem unbounded
};

/// Fixes every variable whose diagonal entry is numerically zero. `ref_scale`
/// is the magnitude used to decide "zero" (defaults to max |m_ii|).
ZeroDiagResult preprocess_zero_diag(const QpInstance& inst, const Tolerances& tol = {}, double ref_scale = -1.0);

struct RowReduction {
  QpInstance instance;
  ReductionStep step;  // in the input problem's indices
};

/// Drops variable i (u_i infinite) through the Schur complement on m_ii, or
/// substitutes x_i = u_i - z_i and lifts the bound (u_i finite).
RowReduction reduce_nonpositive_row(const QpInstance& inst, const Vector& d, const Vector& p, Index i,
                                    const Tolerances& tol = {});

/// Reduces until solve_psd can start. Returns the reduced problem, its
/// parametric vector and the trace; `ray` is set when unboundedness is found
/// on the way.
struct StartableProblem {
  QpInstance instance;
  Vector p;
  ReductionTrace trace;
  std::optional<Vector> ray;
};

StartableProblem reduce_until_startable(const QpInstance& inst, const Tolerances& tol = {});

struct SbarOptions {
  EngineOptions engine;
  bool check_class = true;
  int max_k = 3;
};

/// Solver for M with a psd comparison matrix: block split, reductions,
/// parametric pivoting and trace replay. Throws ClassificationFailed.
SolveOutcome solve_sbar(const QpInstance& inst, const SbarOptions& opts = {});

/// Equations r + S x = 0, bounds lo <= x <= hi, and lo_g <= g + G x <= hi_g.
struct AffineBoxSystem {
  Matrix s;
  Vector r;
  Vector lo;
  Vector hi;
  Matrix g_mat;
  Vector g;
  Vector g_lo;
  Vector g_hi;
  double scale = 1.0;  // magnitude of S used to decide its rank
};

/// Feasible point of A t <= b by Fourier-Motzkin elimination, or nullopt.
std::optional<Vector> fm_solve(const Matrix& a, const Vector& b, double tol = 1e-9);

/// Feasibility of a two-variable AffineBoxSystem: the equations fix a point,
/// a line or nothing, and the remaining inequalities are intersected.
std::optional<Vector> fm_feasibility_2var(const AffineBoxSystem& sys, double tol = 1e-9);

/// Same for any number of variables.
std::optional<Vector> affine_box_feasibility(const AffineBoxSystem& sys, double tol = 1e-9);

/// Bound-fixing scheme for psd M whose order n-1 principal submatrices have
/// psd comparison matrices.
SolveOutcome solve_sbar_n1(const QpInstance& inst, const SbarOptions& opts = {});

/// Recursive version for order n-k principal submatrices; k <= opts.max_k.
SolveOutcome solve_sbar_nk(const QpInstance& inst, int k, const SbarOptions& opts = {});

}  // namespace pppa
