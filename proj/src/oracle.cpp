#include "pppa/oracle.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace pppa {

KktPoint kkt_point(const QpInstance& inst, const Vector& x) {
  const Index n = inst.size();
  KktPoint k;
  k.x = x;
  const Vector g = inst.q + inst.m.multiply(x);
  k.lambda = Vector::Zero(n);
  k.s = Vector::Constant(n, kInf);
  for (Index i = 0; i < n; ++i) {
    if (std::isfinite(inst.u(i))) {
      k.lambda(i) = std::max(-g(i), 0.0);
      k.s(i) = inst.u(i) - x(i);
    }
  }
  k.w = g + k.lambda;
  return k;
}

double kkt_residual(const QpInstance& inst, const Vector& x) {
  const Index n = inst.size();
  if (x.size() != n) return kInf;
  const Vector g = inst.q + inst.m.multiply(x);
  double r = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double ui = inst.u(i);
    r = std::max({r, -x(i), x(i) - ui});
    const double step = std::clamp(x(i) - g(i), 0.0, ui);
    r = std::max(r, std::abs(x(i) - step));
  }
  return r;
}

bool recession_check(const QpInstance& inst, const Vector& ray, double tol) {
  const Index n = inst.size();
  if (ray.size() != n || n == 0 || !ray.allFinite()) return false;
  const double norm = inf_norm(ray);
  if (!(norm > 0.0)) return false;
  const Vector d = ray / norm;
  for (Index i = 0; i < n; ++i) {
    if (d(i) < -tol) return false;
    if (std::isfinite(inst.u(i)) && std::abs(d(i)) > tol) return false;
  }
  const double scale = std::max(inst.m.scale(), 1e-300);
  if (inf_norm(inst.m.multiply(d)) > tol * scale) return false;
  return inst.q.dot(d) < -tol * (1.0 + inf_norm(inst.q));
}

namespace {

Matrix gather(const SymMatrix& m, const IndexSet& rows, const IndexSet& cols) {
  Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  for (Index b = 0; b < out.cols(); ++b) {
    for (Index a = 0; a < out.rows(); ++a) out(a, b) = m(rows[a], cols[b]);
  }
  return out;
}

// Extreme rays of {y : N y >= 0} come from (r-1)-subsets of rows of N with a
// one-dimensional common null space.
std::optional<Vector> search_ray(const QpInstance& inst, double tol) {
  const Index n = inst.size();
  IndexSet inf;
  for (Index i = 0; i < n; ++i) {
    if (!std::isfinite(inst.u(i))) inf.push_back(i);
  }
  if (inf.empty()) return std::nullopt;
  const double scale = std::max(inst.m.scale(), 1e-300);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gather(inst.m, inf, inf));
  IndexSet kernel_cols;
  for (Index c = 0; c < eig.eigenvalues().size(); ++c) {
    if (std::abs(eig.eigenvalues()(c)) <= tol * scale) kernel_cols.push_back(c);
  }
  const Index r = static_cast<Index>(kernel_cols.size());
  if (r == 0) return std::nullopt;
  const Index k = static_cast<Index>(inf.size());
  Matrix basis(k, r);
  for (Index c = 0; c < r; ++c) basis.col(c) = eig.eigenvectors().col(kernel_cols[c]);
  const double qtol = 1e-8 * (1.0 + inf_norm(inst.q));

  IndexSet rows(static_cast<std::size_t>(r - 1));
  for (Index a = 0; a < r - 1; ++a) rows[a] = a;
  while (true) {
    Vector y;
    if (r == 1) {
      y = Vector::Ones(1);
    } else {
      Matrix a(r - 1, r);
      for (Index t = 0; t < r - 1; ++t) a.row(t) = basis.row(rows[t]);
      Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullV);
      const Vector sv = svd.singularValues();
      if (sv.size() == r - 1 && sv(r - 2) > 1e-9 * sv(0)) y = svd.matrixV().col(r - 1);
    }
    if (y.size() == r) {
      Vector dk = basis * y;
      dk /= inf_norm(dk);
      for (double sign : {1.0, -1.0}) {
        const Vector cand = sign * dk;
        if (cand.minCoeff() < -1e-9) continue;
        Vector d = Vector::Zero(n);
        for (Index t = 0; t < k; ++t) d(inf[t]) = std::max(cand(t), 0.0);
        if (inst.q.dot(d) < -qtol) return d;
      }
    }
    if (r <= 1) break;
    Index a = r - 2;
    while (a >= 0 && rows[a] == k - (r - 1) + a) --a;
    if (a < 0) break;
    ++rows[a];
    for (Index b = a + 1; b < r - 1; ++b) rows[b] = rows[b - 1] + 1;
  }
  return std::nullopt;
}

}  // namespace

OracleResult enumerate_active_sets(const QpInstance& inst, double tol) {
  inst.validate();
  const Index n = inst.size();
  if (n > 10) throw Error(ErrorKind::TooLarge, "oracle enumeration is limited to n <= 10");
  OracleResult res;
  if (auto ray = search_ray(inst, tol)) {
    res.status = OracleStatus::Unbounded;
    res.ray = std::move(*ray);
    return res;
  }
  const double scale = std::max(inst.m.scale(), 1e-300);
  const double wtol = 1e-10 * (1.0 + inf_norm(inst.q));
  const Matrix full = inst.m.dense();
  double best_obj = kInf;
  double best_res = kInf;

  std::vector<int> state(static_cast<std::size_t>(n), 0);  // 0 lower, 1 upper, 2 free
  while (true) {
    bool skip = false;
    IndexSet fr;
    Vector x = Vector::Zero(n);
    for (Index i = 0; i < n; ++i) {
      if (state[i] == 1) {
        if (!std::isfinite(inst.u(i))) {
          skip = true;
          break;
        }
        x(i) = inst.u(i);
      } else if (state[i] == 2) {
        fr.push_back(i);
      }
    }
    if (!skip) {
      bool ok = true;
      if (!fr.empty()) {
        const Index f = static_cast<Index>(fr.size());
        const Vector g0 = inst.q + full * x;
        Matrix a(f, f);
        Vector rhs(f);
        for (Index s = 0; s < f; ++s) {
          rhs(s) = -g0(fr[s]);
          for (Index t = 0; t < f; ++t) a(s, t) = full(fr[s], fr[t]);
        }
        const Vector xf = a.completeOrthogonalDecomposition().solve(rhs);
        const double resid = inf_norm(a * xf - rhs);
        ok = resid <= tol * scale * (1.0 + inf_norm(xf));
        for (Index s = 0; s < f && ok; ++s) {
          const double bt = tol * (1.0 + std::abs(xf(s)));
          if (xf(s) < -bt || xf(s) > inst.u(fr[s]) + bt) ok = false;
          x(fr[s]) = std::clamp(xf(s), 0.0, inst.u(fr[s]));
        }
      }
      if (ok) {
        const Vector g = inst.q + full * x;
        for (Index i = 0; i < n && ok; ++i) {
          if (state[i] == 0 && g(i) < -wtol) ok = false;
          if (state[i] == 1 && g(i) > wtol) ok = false;
        }
      }
      if (ok) {
        ++res.kkt_points;
        const double obj = inst.objective(x);
        const double r = kkt_residual(inst, x);
        const double tie = 1e-12 * (1.0 + std::abs(obj));
        if (obj < best_obj - tie || (obj <= best_obj + tie && r < best_res)) {
          best_obj = obj;
          best_res = r;
          res.x = x;
        }
      }
    }
    Index pos = 0;
    while (pos < n && state[pos] == 2) state[pos++] = 0;
    if (pos == n) break;
    ++state[pos];
  }
  if (res.kkt_points > 0) {
    res.status = OracleStatus::Optimal;
    res.objective = best_obj;
  }
  return res;
}

SolveOutcome certify(const QpInstance& inst, SolveOutcome outcome, const Tolerances& tol) {
  if (outcome.status == SolveStatus::Optimal) {
    const double bound = tol.kkt * (1.0 + inf_norm(inst.q));
    const double r = kkt_residual(inst, *outcome.x);
    if (!(r <= bound)) {
      return SolveOutcome::failure(ErrorKind::InvariantViolation,
                                   "KKT residual " + std::to_string(r) + " exceeds the tolerance", outcome.stats);
    }
  } else if (outcome.status == SolveStatus::Unbounded) {
    if (!outcome.ray || !recession_check(inst, outcome.ray->direction, tol.kkt)) {
      return SolveOutcome::failure(ErrorKind::InvariantViolation, "recession certificate failed validation",
                                   outcome.stats);
    }
  }
  return outcome;
}

}  // namespace pppa
