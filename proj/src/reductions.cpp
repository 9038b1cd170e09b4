#include "pppa/reductions.hpp"

#include "pppa/classify.hpp"
#include "pppa/matrix_core.hpp"
#include "pppa/oracle.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>

namespace pppa {

ReductionTrace::ReductionTrace(Index n) : original_n(n), ids(static_cast<std::size_t>(n)) {
  for (Index i = 0; i < n; ++i) ids[i] = i;
}

void ReductionTrace::push(ReductionStep local) {
  const Index pos = local.index;
  local.index = ids[pos];
  for (auto& entry : local.row) entry.first = ids[entry.first];
  if (local.kind != StepKind::Flip) ids.erase(ids.begin() + pos);
  steps.push_back(std::move(local));
}

Vector ReductionTrace::replay_solution(const Vector& reduced_x) const {
  Vector x = Vector::Constant(original_n, std::numeric_limits<double>::quiet_NaN());
  for (Index a = 0; a < static_cast<Index>(ids.size()); ++a) x(ids[a]) = reduced_x(a);
  for (auto it = steps.rbegin(); it != steps.rend(); ++it) {
    switch (it->kind) {
      case StepKind::Fix: x(it->index) = it->value; break;
      case StepKind::Flip: x(it->index) = it->value - x(it->index); break;
      case StepKind::Drop: {
        double s = it->qi;
        for (const auto& [k, mik] : it->row) s += mik * x(k);
        x(it->index) = -s / it->pivot;
        break;
      }
    }
  }
  return x;
}

Vector ReductionTrace::replay_ray(const Vector& reduced_ray) const {
  Vector d = Vector::Zero(original_n);
  for (Index a = 0; a < static_cast<Index>(ids.size()); ++a) d(ids[a]) = reduced_ray(a);
  for (auto it = steps.rbegin(); it != steps.rend(); ++it) {
    switch (it->kind) {
      case StepKind::Fix: d(it->index) = 0.0; break;
      case StepKind::Flip: d(it->index) = -d(it->index); break;
      case StepKind::Drop: {
        double s = 0.0;
        for (const auto& [k, mik] : it->row) s += mik * d(k);
        d(it->index) = -s / it->pivot;
        break;
      }
    }
  }
  return d;
}

namespace {

QpInstance restrict(const QpInstance& inst, const IndexSet& keep) {
  QpInstance out;
  out.m = inst.m.principal(keep);
  out.q.resize(static_cast<Index>(keep.size()));
  out.u.resize(static_cast<Index>(keep.size()));
  for (Index a = 0; a < out.q.size(); ++a) {
    out.q(a) = inst.q(keep[a]);
    out.u(a) = inst.u(keep[a]);
  }
  return out;
}

Vector pick(const Vector& v, const IndexSet& keep) {
  Vector out(static_cast<Index>(keep.size()));
  for (Index a = 0; a < out.size(); ++a) out(a) = v(keep[a]);
  return out;
}

struct Fixing {
  std::vector<std::pair<Index, double>> fixed;  // ascending local index
  IndexSet rest;
  std::optional<Vector> ray;
};

Fixing find_zero_diag(const QpInstance& inst, const Tolerances& tol, double scale) {
  const Index n = inst.size();
  const double zero_tol = tol.pivot * scale;
  const double qtol = tol.ratio * (1.0 + inf_norm(inst.q));
  Fixing f;
  for (Index i = 0; i < n; ++i) {
    const double mii = inst.m(i, i);
    if (mii > zero_tol) {
      f.rest.push_back(i);
      continue;
    }
    if (mii < -tol.psd * scale) throw Error(ErrorKind::InvariantViolation, "negative diagonal entry");
    const Index lo = inst.m.is_tridiagonal() ? std::max<Index>(0, i - 1) : 0;
    const Index hi = inst.m.is_tridiagonal() ? std::min(n - 1, i + 1) : n - 1;
    for (Index j = lo; j <= hi; ++j) {
      if (j == i) continue;
      const double bound = std::sqrt(std::max(mii, 0.0) * std::max(inst.m(j, j), 0.0)) + tol.psd * scale;
      if (std::abs(inst.m(i, j)) > bound) {
        throw Error(ErrorKind::InvariantViolation, "zero diagonal entry with a nonzero row");
      }
    }
    double value = 0.0;
    if (inst.q(i) < 0.0) {
      if (std::isfinite(inst.u(i))) {
        value = inst.u(i);
      } else if (inst.q(i) < -qtol) {
        Vector d = Vector::Zero(n);
        d(i) = 1.0;
        f.ray = std::move(d);
        return f;
      }
    }
    f.fixed.emplace_back(i, value);
  }
  return f;
}

QpInstance apply_fixing(const QpInstance& inst, const Fixing& f) {
  QpInstance out = restrict(inst, f.rest);
  for (Index a = 0; a < static_cast<Index>(f.rest.size()); ++a) {
    for (const auto& [i, value] : f.fixed) {
      if (value != 0.0) out.q(a) += inst.m(f.rest[a], i) * value;
    }
  }
  return out;
}

void push_fixing(ReductionTrace& trace, const Fixing& f) {
  for (auto it = f.fixed.rbegin(); it != f.fixed.rend(); ++it) {
    ReductionStep s;
    s.kind = StepKind::Fix;
    s.index = it->first;
    s.value = it->second;
    trace.push(std::move(s));
  }
}

}  // namespace

ZeroDiagResult preprocess_zero_diag(const QpInstance& inst, const Tolerances& tol, double ref_scale) {
  const double scale = ref_scale > 0.0 ? ref_scale : inst.m.scale();
  ZeroDiagResult r{inst, ReductionTrace(inst.size()), std::nullopt};
  Fixing f = find_zero_diag(inst, tol, scale);
  if (f.ray) {
    r.ray = std::move(f.ray);
    return r;
  }
  if (f.fixed.empty()) return r;
  r.instance = apply_fixing(inst, f);
  push_fixing(r.trace, f);
  return r;
}

RowReduction reduce_nonpositive_row(const QpInstance& inst, const Vector& d, const Vector& p, Index i,
                                    const Tolerances& tol) {
  const Index n = inst.size();
  if (i < 0 || i >= n || d.size() != n || p.size() != n) {
    throw Error(ErrorKind::InvalidArgument, "index or vector length out of range");
  }
  const double thr = tol.ratio * inf_norm(p);
  const double qtol = tol.ratio * (1.0 + inf_norm(inst.q));
  const double mii = inst.m(i, i);
  if (!(p(i) <= thr) || !(mii > 0.0) || !(inst.q(i) < -qtol)) {
    throw Error(ErrorKind::PreconditionViolated, "row reduction needs p_i = 0, m_ii > 0 and q_i < 0");
  }
  RowReduction out;
  ReductionStep& step = out.step;
  step.index = i;
  const Index lo = inst.m.is_tridiagonal() ? std::max<Index>(0, i - 1) : 0;
  const Index hi = inst.m.is_tridiagonal() ? std::min(n - 1, i + 1) : n - 1;

  if (!std::isfinite(inst.u(i))) {
    step.kind = StepKind::Drop;
    step.pivot = mii;
    step.qi = inst.q(i);
    for (Index k = lo; k <= hi; ++k) {
      if (k != i && inst.m(i, k) != 0.0) step.row.emplace_back(k, inst.m(i, k));
    }
    const IndexSet rest = complement(n, {i});
    out.instance.m = schur_complement(inst.m, {i}, tol);
    const double eps = 16.0 * static_cast<double>(n) * std::numeric_limits<double>::epsilon();
    for (const auto& [k, mik] : step.row) {
      const Index a = k < i ? k : k - 1;
      const double noise = eps * std::max(std::abs(inst.m(k, k)), mik * mik / mii);
      if (std::abs(out.instance.m(a, a)) <= noise) out.instance.m.set(a, a, 0.0);
    }
    out.instance.q = pick(inst.q, rest);
    out.instance.u = pick(inst.u, rest);
    for (const auto& [k, mik] : step.row) {
      const Index a = k < i ? k : k - 1;
      out.instance.q(a) -= mik / mii * inst.q(i);
    }
    return out;
  }

  const double ui = inst.u(i);
  step.kind = StepKind::Flip;
  step.value = ui;
  out.instance = inst;
  QpInstance& r = out.instance;
  for (Index k = lo; k <= hi; ++k) {
    if (k != i) r.q(k) = inst.q(k) + inst.m(k, i) * ui;
  }
  r.q(i) = -(inst.q(i) + mii * ui);
  r.u(i) = kInf;
  for (Index k = lo; k <= hi; ++k) {
    if (k != i) r.m.set(k, i, -inst.m(k, i));
  }
  return out;
}

StartableProblem reduce_until_startable(const QpInstance& inst, const Tolerances& tol) {
  StartableProblem sp{inst, Vector(), ReductionTrace(inst.size()), std::nullopt};
  const double scale0 = inst.m.scale();
  Vector d;
  try {
    d = dominance_vector(inst.m, tol);
  } catch (const Error& e) {
    throw Error(ErrorKind::ClassificationFailed, e.what());
  }
  QpInstance& work = sp.instance;
  while (true) {
    Fixing f = find_zero_diag(work, tol, scale0);
    if (f.ray) {
      sp.ray = sp.trace.replay_ray(*f.ray);
      return sp;
    }
    if (!f.fixed.empty()) {
      work = apply_fixing(work, f);
      push_fixing(sp.trace, f);
      d = pick(d, f.rest);
    }
    if (work.size() == 0) {
      sp.p = Vector();
      return sp;
    }
    sp.p = build_parametric_vector(work.m, d, tol);
    const IndexSet bad = start_violations(work.q, sp.p, tol);
    if (bad.empty()) return sp;
    Index chosen = bad.front();
    for (Index i : bad) {
      if (!std::isfinite(work.u(i))) {
        chosen = i;
        break;
      }
    }
    RowReduction red = reduce_nonpositive_row(work, d, sp.p, chosen, tol);
    if (red.step.kind == StepKind::Drop) d = pick(d, complement(work.size(), {chosen}));
    sp.trace.push(std::move(red.step));
    work = std::move(red.instance);
  }
}

namespace {

void add_stats(SolveStats& into, const SolveStats& s) {
  into.pivots += s.pivots;
  into.two_by_two_pivots += s.two_by_two_pivots;
  into.flops += s.flops;
  into.refactorizations += s.refactorizations;
  into.reductions += s.reductions;
}

}  // namespace

SolveOutcome solve_sbar(const QpInstance& inst, const SbarOptions& opts) {
  inst.validate();
  const Tolerances& tol = opts.engine.tol;
  if (opts.check_class && !is_in_sbar_plus(inst.m, tol.psd)) {
    throw Error(ErrorKind::ClassificationFailed, "comparison matrix is not positive semidefinite");
  }
  const Index n = inst.size();
  const std::vector<IndexSet> blocks = irreducible_components(inst.m);
  Vector x = Vector::Zero(n);
  SolveStats stats;
  for (const IndexSet& block : blocks) {
    const bool whole = static_cast<Index>(block.size()) == n;
    const QpInstance sub = whole ? QpInstance{} : restrict(inst, block);
    const QpInstance& b = whole ? inst : sub;
    StartableProblem sp = reduce_until_startable(b, tol);
    stats.reductions += static_cast<Index>(sp.trace.steps.size());

    std::optional<Vector> ray = std::move(sp.ray);
    Index entering = -1;
    Vector xw;
    if (!ray && sp.instance.size() > 0) {
      SolveOutcome out = solve_psd(sp.instance, sp.p, opts.engine);
      add_stats(stats, out.stats);
      if (out.status == SolveStatus::Unbounded) {
        ray = sp.trace.replay_ray(out.ray->direction);
        entering = block[sp.trace.ids[out.ray->entering]];
      } else {
        xw = std::move(*out.x);
      }
    }
    if (ray) {
      Vector d = Vector::Zero(n);
      for (Index a = 0; a < static_cast<Index>(block.size()); ++a) d(block[a]) = std::max((*ray)(a), 0.0);
      const double norm = inf_norm(d);
      if (norm > 0.0) d /= norm;
      return certify(inst, SolveOutcome::unbounded(Ray{std::move(d), entering}, stats), tol);
    }
    const Vector xb = sp.trace.replay_solution(xw);
    for (Index a = 0; a < static_cast<Index>(block.size()); ++a) {
      x(block[a]) = std::clamp(xb(a), 0.0, inst.u(block[a]));
    }
  }
  return certify(inst, SolveOutcome::optimal(inst, std::move(x), stats), tol);
}

// ---------------------------------------------------------------------------
// Linear feasibility

std::optional<Vector> fm_solve(const Matrix& a_in, const Vector& b_in, double tol) {
  const Index dim = a_in.cols();
  const Index rows = a_in.rows();
  Matrix a(rows, dim);
  Vector b(rows);
  Index kept = 0;
  for (Index r = 0; r < rows; ++r) {
    const double s = inf_norm(a_in.row(r));
    if (!(s > 0.0)) {
      if (b_in(r) < -tol * (1.0 + std::abs(b_in(r)))) return std::nullopt;
      continue;
    }
    a.row(kept) = a_in.row(r) / s;
    b(kept) = b_in(r) / s;
    ++kept;
  }
  a.conservativeResize(kept, dim);
  b.conservativeResize(kept);
  if (dim == 0) return Vector();

  const Index last = dim - 1;
  const double zero = 1e-12;
  std::vector<Index> pos;
  std::vector<Index> neg;
  std::vector<Index> flat;
  for (Index r = 0; r < kept; ++r) {
    const double c = a(r, last);
    if (c > zero) {
      pos.push_back(r);
    } else if (c < -zero) {
      neg.push_back(r);
    } else {
      flat.push_back(r);
    }
  }
  const Index reduced_rows = static_cast<Index>(flat.size() + pos.size() * neg.size());
  if (reduced_rows > 2000000) throw Error(ErrorKind::TooLarge, "Fourier-Motzkin elimination grew too large");
  Matrix ra(reduced_rows, last);
  Vector rb(reduced_rows);
  Index w = 0;
  for (Index r : flat) {
    ra.row(w) = a.row(r).head(last);
    rb(w++) = b(r);
  }
  for (Index p : pos) {
    for (Index q : neg) {
      ra.row(w) = a.row(p).head(last) / a(p, last) - a.row(q).head(last) / a(q, last);
      rb(w++) = b(p) / a(p, last) - b(q) / a(q, last);
    }
  }
  std::optional<Vector> head = fm_solve(ra, rb, tol);
  if (!head) return std::nullopt;

  double lower = -kInf;
  double upper = kInf;
  for (Index p : pos) upper = std::min(upper, (b(p) - a.row(p).head(last).dot(*head)) / a(p, last));
  for (Index q : neg) lower = std::max(lower, (b(q) - a.row(q).head(last).dot(*head)) / a(q, last));
  if (lower > upper + tol * (1.0 + std::abs(lower) + std::abs(upper))) return std::nullopt;
  double t = 0.0;
  if (std::isfinite(lower) && std::isfinite(upper)) {
    t = lower <= upper ? 0.5 * (lower + upper) : lower;
  } else if (std::isfinite(lower)) {
    t = lower;
  } else if (std::isfinite(upper)) {
    t = upper;
  }
  Vector out(dim);
  out.head(last) = *head;
  out(last) = t;
  return out;
}

std::optional<Vector> affine_box_feasibility(const AffineBoxSystem& sys, double tol) {
  const Index nb = sys.s.cols();
  const Index ng = sys.g.size();
  Vector x0 = Vector::Zero(nb);
  Matrix z(nb, 0);
  if (nb > 0) {
    Eigen::JacobiSVD<Matrix> svd(sys.s, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vector& sv = svd.singularValues();
    Index rank = 0;
    while (rank < sv.size() && sv(rank) > tol * sys.scale) ++rank;
    const Vector ur = svd.matrixU().leftCols(rank).transpose() * sys.r;
    x0 = -svd.matrixV().leftCols(rank) * (ur.array() / sv.head(rank).array()).matrix();
    z = svd.matrixV().rightCols(nb - rank);
  }
  const double eq_tol = 1e-8 * (1.0 + inf_norm(sys.r) + sys.scale * inf_norm(x0));
  if (nb > 0 && inf_norm(sys.s * x0 + sys.r) > eq_tol) return std::nullopt;
  if (nb == 0 && inf_norm(sys.r) > eq_tol) return std::nullopt;

  // Inequalities A t <= b in the free coordinates t of x = x0 + Z t.
  const Index dim = z.cols();
  std::vector<Vector> rows;
  std::vector<double> rhs;
  auto add = [&](const Vector& coef, double bound) {
    rows.push_back(coef);
    rhs.push_back(bound);
  };
  for (Index j = 0; j < nb; ++j) {
    if (std::isfinite(sys.hi(j))) add(z.row(j).transpose(), sys.hi(j) - x0(j));
    if (std::isfinite(sys.lo(j))) add(-z.row(j).transpose(), x0(j) - sys.lo(j));
  }
  const Vector g0 = ng > 0 ? Vector(sys.g + sys.g_mat * x0) : Vector();
  const Matrix gz = ng > 0 ? Matrix(sys.g_mat * z) : Matrix(0, dim);
  for (Index k = 0; k < ng; ++k) {
    if (std::isfinite(sys.g_hi(k))) add(gz.row(k).transpose(), sys.g_hi(k) - g0(k));
    if (std::isfinite(sys.g_lo(k))) add(-gz.row(k).transpose(), g0(k) - sys.g_lo(k));
  }
  Matrix a(static_cast<Index>(rows.size()), dim);
  Vector b(static_cast<Index>(rows.size()));
  for (Index r = 0; r < a.rows(); ++r) {
    a.row(r) = rows[r].transpose();
    b(r) = rhs[r];
  }
  std::optional<Vector> t = fm_solve(a, b, tol);
  if (!t) return std::nullopt;
  return Vector(x0 + z * *t);
}

std::optional<Vector> fm_feasibility_2var(const AffineBoxSystem& sys, double tol) {
  if (sys.s.rows() != 2 || sys.s.cols() != 2) throw Error(ErrorKind::InvalidArgument, "system must have 2 variables");
  return affine_box_feasibility(sys, tol);
}

// ---------------------------------------------------------------------------
// Bound fixing

namespace {

Matrix gather(const SymMatrix& m, const IndexSet& rows, const IndexSet& cols) {
  Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  for (Index b = 0; b < out.cols(); ++b) {
    for (Index a = 0; a < out.rows(); ++a) out(a, b) = m(rows[a], cols[b]);
  }
  return out;
}

bool nonsingular(const SymMatrix& m, const IndexSet& alpha, const Tolerances& tol) {
  const PivotedLdl ldl = pivoted_ldl(gather(m, alpha, alpha), tol.pivot * m.scale(), 0.0);
  return ldl.rank == static_cast<Index>(alpha.size());
}

// Solution of q + Mx = 0, 0 <= x <= u for an irreducible block.
std::optional<Vector> block_stationary_point(const QpInstance& inst, const Tolerances& tol) {
  const Index m = inst.size();
  const double scale = std::max(inst.m.scale(), 1e-300);
  IndexSet alpha;
  bool found = m <= 2;
  if (!found) {
    const Index k = m - 2;
    IndexSet cand(static_cast<std::size_t>(k));
    for (Index a = 0; a < k; ++a) cand[a] = a;
    while (true) {
      if (nonsingular(inst.m, cand, tol)) {
        alpha = cand;
        found = true;
        break;
      }
      Index a = k - 1;
      while (a >= 0 && cand[a] == m - k + a) --a;
      if (a < 0) break;
      ++cand[a];
      for (Index b = a + 1; b < k; ++b) cand[b] = cand[b - 1] + 1;
    }
  }
  if (!found) {
    const PivotedLdl ldl = pivoted_ldl(inst.m.dense(), tol.pivot * scale, tol.psd * scale);
    alpha.assign(ldl.order.begin(), ldl.order.begin() + ldl.rank);
    std::sort(alpha.begin(), alpha.end());
  }
  const IndexSet beta = complement(m, alpha);
  const Index ka = static_cast<Index>(alpha.size());

  AffineBoxSystem sys;
  sys.scale = scale;
  const Vector qa = pick(inst.q, alpha);
  const Vector qb = pick(inst.q, beta);
  const Matrix mab = gather(inst.m, alpha, beta);
  sys.lo = Vector::Zero(static_cast<Index>(beta.size()));
  sys.hi = pick(inst.u, beta);
  if (ka > 0) {
    Eigen::LLT<Matrix> llt(gather(inst.m, alpha, alpha));
    if (llt.info() != Eigen::Success) return std::nullopt;
    const Matrix inv_mab = llt.solve(mab);
    const Vector inv_qa = llt.solve(qa);
    sys.s = gather(inst.m, beta, beta) - mab.transpose() * inv_mab;
    sys.r = qb - mab.transpose() * inv_qa;
    sys.g_mat = -inv_mab;
    sys.g = -inv_qa;
    sys.g_lo = Vector::Zero(ka);
    sys.g_hi = pick(inst.u, alpha);
  } else {
    sys.s = gather(inst.m, beta, beta);
    sys.r = qb;
    sys.g_mat = Matrix(0, static_cast<Index>(beta.size()));
    sys.g = Vector();
    sys.g_lo = Vector();
    sys.g_hi = Vector();
  }
  const std::optional<Vector> xb =
      beta.size() == 2 ? fm_feasibility_2var(sys, tol.psd) : affine_box_feasibility(sys, tol.psd);
  if (!xb) return std::nullopt;
  Vector x(m);
  for (Index a = 0; a < static_cast<Index>(beta.size()); ++a) x(beta[a]) = (*xb)(a);
  if (ka > 0) {
    const Vector xa = sys.g + sys.g_mat * *xb;
    for (Index a = 0; a < ka; ++a) x(alpha[a]) = xa(a);
  }
  return Vector(x.cwiseMax(0.0).cwiseMin(inst.u));
}

std::optional<Vector> stationary_point(const QpInstance& inst, const Tolerances& tol) {
  Vector x = Vector::Zero(inst.size());
  for (const IndexSet& block : irreducible_components(inst.m)) {
    const std::optional<Vector> xb = block_stationary_point(restrict(inst, block), tol);
    if (!xb) return std::nullopt;
    for (Index a = 0; a < static_cast<Index>(block.size()); ++a) x(block[a]) = (*xb)(a);
  }
  return x;
}

// Direction in {d >= 0 on the infinitely bounded coordinates : Md = 0} with
// q'd < 0, found on a null-space basis by Fourier-Motzkin.
std::optional<Vector> kernel_cone_ray(const QpInstance& inst, const Tolerances& tol) {
  const Index n = inst.size();
  IndexSet inf;
  for (Index i = 0; i < n; ++i) {
    if (!std::isfinite(inst.u(i))) inf.push_back(i);
  }
  if (inf.empty()) return std::nullopt;
  const double scale = std::max(inst.m.scale(), 1e-300);
  const Matrix a = gather(inst.m, inf, inf);
  const PivotedLdl ldl = pivoted_ldl(a, tol.pivot * scale, tol.psd * scale);
  const Index k = static_cast<Index>(inf.size());
  const Index r = ldl.rank;
  const Index dim = k - r;
  if (dim == 0 || dim > 4) return std::nullopt;
  const IndexSet lead(ldl.order.begin(), ldl.order.begin() + r);
  const IndexSet tail(ldl.order.begin() + r, ldl.order.end());
  Matrix basis = Matrix::Zero(k, dim);
  if (r > 0) {
    Eigen::LLT<Matrix> llt(gather(SymMatrix::from_dense(a), lead, lead));
    const Matrix coupling = llt.solve(gather(SymMatrix::from_dense(a), lead, tail));
    for (Index t = 0; t < r; ++t) basis.row(lead[t]) = -coupling.row(t);
  }
  for (Index t = 0; t < dim; ++t) basis(tail[t], t) = 1.0;
  const Vector qi = pick(inst.q, inf);
  Matrix rows(k + 1, dim);
  Vector rhs = Vector::Zero(k + 1);
  rows.topRows(k) = -basis;
  rows.row(k) = (basis.transpose() * qi).transpose();
  rhs(k) = -1.0;
  const std::optional<Vector> y = fm_solve(rows, rhs, tol.psd);
  if (!y) return std::nullopt;
  Vector dk = (basis * *y).cwiseMax(0.0);
  const double norm = dk.maxCoeff();
  if (!(norm > 0.0)) return std::nullopt;
  Vector d = Vector::Zero(n);
  for (Index t = 0; t < k; ++t) d(inf[t]) = dk(t) / norm;
  return d;
}

Vector insert_at(const Vector& v, Index i, double value) {
  Vector out(v.size() + 1);
  out.head(i) = v.head(i);
  out(i) = value;
  out.tail(v.size() - i) = v.tail(v.size() - i);
  return out;
}

SolveOutcome solve_fixing(const QpInstance& inst, int k, const SbarOptions& opts) {
  if (k == 0) {
    SbarOptions inner = opts;
    return solve_sbar(inst, inner);
  }
  const Tolerances& tol = opts.engine.tol;
  const Index n = inst.size();
  SolveStats stats;
  if (n == 0) return SolveOutcome::optimal(inst, Vector(), stats);
  const double cert = tol.cert * (1.0 + inf_norm(inst.q));

  auto sub_solve = [&](const QpInstance& sub) {
    SolveOutcome out = solve_fixing(sub, k - 1, opts);
    ++stats.subproblems;
    add_stats(stats, out.stats);
    return out;
  };
  auto lift_ray = [&](const SolveOutcome& out, Index i) {
    Vector d = insert_at(out.ray->direction, i, 0.0);
    return SolveOutcome::unbounded(Ray{std::move(d), -1}, stats);
  };

  for (Index i = 0; i < n; ++i) {
    const IndexSet rest = complement(n, {i});
    QpInstance lb = restrict(inst, rest);
    SolveOutcome out = sub_solve(lb);
    if (out.status == SolveStatus::Error) return SolveOutcome::failure(*out.error, out.message, stats);
    if (out.status == SolveStatus::Unbounded) return certify(inst, lift_ray(out, i), tol);
    double wi = inst.q(i);
    for (Index a = 0; a < static_cast<Index>(rest.size()); ++a) wi += inst.m(i, rest[a]) * (*out.x)(a);
    if (wi >= -cert) return certify(inst, SolveOutcome::optimal(inst, insert_at(*out.x, i, 0.0), stats), tol);

    if (!std::isfinite(inst.u(i))) continue;
    const double ui = inst.u(i);
    QpInstance ub = std::move(lb);
    for (Index a = 0; a < static_cast<Index>(rest.size()); ++a) ub.q(a) += inst.m(rest[a], i) * ui;
    out = sub_solve(ub);
    if (out.status == SolveStatus::Error) return SolveOutcome::failure(*out.error, out.message, stats);
    if (out.status == SolveStatus::Unbounded) return certify(inst, lift_ray(out, i), tol);
    wi = inst.q(i) + inst.m(i, i) * ui;
    for (Index a = 0; a < static_cast<Index>(rest.size()); ++a) wi += inst.m(i, rest[a]) * (*out.x)(a);
    if (wi <= cert) return certify(inst, SolveOutcome::optimal(inst, insert_at(*out.x, i, ui), stats), tol);
  }

  ++stats.subproblems;
  if (std::optional<Vector> x = stationary_point(inst, tol)) {
    return certify(inst, SolveOutcome::optimal(inst, std::move(*x), stats), tol);
  }
  if (std::optional<Vector> d = kernel_cone_ray(inst, tol)) {
    return certify(inst, SolveOutcome::unbounded(Ray{std::move(*d), -1}, stats), tol);
  }
  return SolveOutcome::failure(ErrorKind::InvariantViolation,
                               "no stationary point in the box and no recession direction found", stats);
}

}  // namespace

SolveOutcome solve_sbar_n1(const QpInstance& inst, const SbarOptions& opts) { return solve_sbar_nk(inst, 1, opts); }

SolveOutcome solve_sbar_nk(const QpInstance& inst, int k, const SbarOptions& opts) {
  inst.validate();
  if (k < 0) throw Error(ErrorKind::InvalidArgument, "k must be nonnegative");
  if (k > opts.max_k) throw Error(ErrorKind::RecursionCapExceeded, "k exceeds the recursion cap");
  if (k > 0 && !is_psd(inst.m, opts.engine.tol.psd)) {
    throw Error(ErrorKind::ClassificationFailed, "matrix is not positive semidefinite");
  }
  return solve_fixing(inst, k, opts);
}

}  // namespace pppa
