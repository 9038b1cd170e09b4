#include "pppa/pivot_engine.hpp"

#include <algorithm>
#include <cmath>

namespace pppa {

Partition::Partition(Index n) : role_(static_cast<std::size_t>(n), Role::Beta) { counts_[1] = n; }

void Partition::set(Index i, Role r) {
  --counts_[static_cast<int>(role_[i])];
  role_[i] = r;
  ++counts_[static_cast<int>(r)];
}

IndexSet Partition::members(Role r) const {
  IndexSet out;
  out.reserve(static_cast<std::size_t>(count(r)));
  for (Index i = 0; i < size(); ++i) {
    if (role_[i] == r) out.push_back(i);
  }
  return out;
}

// ---------------------------------------------------------------------------

DenseInverseBasis::DenseInverseBasis(const SymMatrix& m, const Tolerances& tol)
    : m_(m), tol_(tol), factor_(m.size()) {}

void DenseInverseBasis::add(Index i) { factor_.add(m_, i, tol_); }

void DenseInverseBasis::remove(Index i) { factor_.remove(m_, i, tol_); }

void DenseInverseBasis::bars(const Vector& c, const Vector& p, Vector& qbar, Vector& pbar) {
  const Index n = m_.size();
  const Index k = factor_.basis_size();
  const IndexSet& alpha = factor_.alpha();
  const Matrix& a = m_.dense_ref();
  Matrix rhs(k, 2);
  for (Index r = 0; r < k; ++r) {
    rhs(r, 0) = c(alpha[r]);
    rhs(r, 1) = p(alpha[r]);
  }
  const Matrix sol = factor_.inverse() * rhs;
  Matrix y(n, 2);
  y.col(0) = c;
  y.col(1) = p;
  for (Index r = 0; r < k; ++r) y.noalias() -= a.col(alpha[r]) * sol.row(r);
  qbar = y.col(0);
  pbar = y.col(1);
  for (Index r = 0; r < k; ++r) {
    qbar(alpha[r]) = sol(r, 0);
    pbar(alpha[r]) = sol(r, 1);
  }
  flops_ += 4 * k * k + 4 * n * k;
}

double DenseInverseBasis::border(Index i, Vector& mhat) {
  const Vector h = factor_.border_solve(m_, i);
  const double s = factor_.schur_scalar(m_, i, h);
  mhat.setZero(m_.size());
  const IndexSet& alpha = factor_.alpha();
  for (Index r = 0; r < h.size(); ++r) mhat(alpha[r]) = h(r);
  flops_ += 2 * h.size() * h.size() + 2 * h.size();
  return s;
}

TridiagonalBasis::TridiagonalBasis(const SymMatrix& m, const Tolerances& tol)
    : m_(m), tol_(tol), in_(static_cast<std::size_t>(m.size()), 0), rhs_(m.size(), 2), out_(m.size(), 2) {
  if (!m.is_tridiagonal()) throw Error(ErrorKind::InvalidArgument, "TridiagonalBasis needs a tridiagonal matrix");
}

void TridiagonalBasis::bars(const Vector& c, const Vector& p, Vector& qbar, Vector& pbar) {
  const Index n = m_.size();
  const Vector& e = m_.band_off();
  rhs_.col(0) = c;
  rhs_.col(1) = p;
  flops_ += tridiag_solve_masked(m_, in_, rhs_, out_, tol_);
  qbar.resize(n);
  pbar.resize(n);
  for (Index i = 0; i < n; ++i) {
    if (in_[i]) {
      qbar(i) = out_(i, 0);
      pbar(i) = out_(i, 1);
      continue;
    }
    double sq = c(i);
    double sp = p(i);
    if (i > 0 && in_[i - 1]) {
      sq -= e(i - 1) * out_(i - 1, 0);
      sp -= e(i - 1) * out_(i - 1, 1);
    }
    if (i + 1 < n && in_[i + 1]) {
      sq -= e(i) * out_(i + 1, 0);
      sp -= e(i) * out_(i + 1, 1);
    }
    qbar(i) = sq;
    pbar(i) = sp;
  }
  flops_ += 8 * n;
}

double TridiagonalBasis::border(Index i, Vector& mhat) {
  const Index n = m_.size();
  const Vector& e = m_.band_off();
  Matrix rhs = Matrix::Zero(n, 1);
  Matrix out = Matrix::Zero(n, 1);
  if (i > 0 && in_[i - 1]) rhs(i - 1, 0) = e(i - 1);
  if (i + 1 < n && in_[i + 1]) rhs(i + 1, 0) = e(i);
  flops_ += tridiag_solve_masked(m_, in_, rhs, out, tol_);
  mhat = out.col(0);
  double s = m_.band_diag()(i);
  if (i > 0 && in_[i - 1]) s -= e(i - 1) * mhat(i - 1);
  if (i + 1 < n && in_[i + 1]) s -= e(i) * mhat(i + 1);
  flops_ += 4;
  return s;
}

std::unique_ptr<BasisSolver> make_basis_solver(const SymMatrix& m, const Tolerances& tol) {
  if (m.is_tridiagonal()) return std::make_unique<TridiagonalBasis>(m, tol);
  return std::make_unique<DenseInverseBasis>(m, tol);
}

// ---------------------------------------------------------------------------

namespace {

void add_column(const SymMatrix& m, Vector& c, Index i, double scale) {
  if (m.is_tridiagonal()) {
    c(i) += m(i, i) * scale;
    if (i > 0) c(i - 1) += m(i - 1, i) * scale;
    if (i + 1 < m.size()) c(i + 1) += m(i + 1, i) * scale;
  } else {
    c.noalias() += m.dense_ref().col(i) * scale;
  }
}

}  // namespace

ParamState initial_state(const QpInstance& inst, const Tolerances& tol) {
  ParamState s;
  s.partition = Partition(inst.size());
  s.c = inst.q;
  s.basis = make_basis_solver(inst.m, tol);
  return s;
}

Bars compute_bars(const QpInstance& inst, const Partition& partition, const Vector& p, BasisSolver& basis) {
  Vector c = inst.q;
  for (Index i = 0; i < partition.size(); ++i) {
    if (partition.role(i) == Role::Gamma) add_column(inst.m, c, i, inst.u(i));
  }
  Bars b;
  basis.bars(c, p, b.qbar, b.pbar);
  return b;
}

const char* to_string(PivotCase c) {
  switch (c) {
    case PivotCase::Optimal: return "optimal";
    case PivotCase::ToUpper: return "to_upper";
    case PivotCase::Enter: return "enter";
    case PivotCase::AtUpper: return "at_ub";
    case PivotCase::ExchangeToLower: return "exchange_to_lower";
    case PivotCase::ExchangeToUpper: return "exchange_to_upper";
    case PivotCase::Unbounded: return "unbounded";
  }
  return "unknown";
}

RatioDecision ratio_test_tau(const ParamState& state, const Vector& u, const Tolerances& tol) {
  const Index n = state.partition.size();
  const double norm = inf_norm(state.pbar);
  const double thr = tol.ratio * norm;
  RatioDecision best;
  best.tau_new = -kInf;
  bool best_beta = false;
  if (norm > 0.0) {
    for (Index i = 0; i < n; ++i) {
      const double pb = state.pbar(i);
      if (!(pb > thr)) continue;
      double rho;
      bool beta;
      const Role r = state.partition.role(i);
      if (r == Role::Beta) {
        rho = -state.qbar(i) / pb;
        beta = true;
      } else if (r == Role::Alpha && std::isfinite(u(i))) {
        rho = -(u(i) + state.qbar(i)) / pb;
        beta = false;
      } else {
        continue;
      }
      if (rho > best.tau_new || (rho == best.tau_new && beta && !best_beta)) {
        best.tau_new = rho;
        best.index = i;
        best.kind = beta ? PivotCase::Enter : PivotCase::ToUpper;
        best_beta = beta;
      }
    }
  }
  if (!(best.tau_new > 0.0)) return RatioDecision{0.0, PivotCase::Optimal, -1};
  best.tau_new = std::min(best.tau_new, state.tau_cur);
  return best;
}

SecondDecision second_ratio_test(const ParamState& state, const QpInstance& inst, Index ibar, double tau_new,
                                 const Vector& mhat, const Tolerances& tol) {
  SecondDecision best;
  if (std::isfinite(inst.u(ibar))) {
    best.rho = inst.u(ibar);
    best.kind = PivotCase::AtUpper;
  }
  const Index n = state.partition.size();
  double norm = 0.0;
  for (Index j = 0; j < n; ++j) {
    if (state.partition.role(j) == Role::Alpha) norm = std::max(norm, std::abs(mhat(j)));
  }
  const double thr = tol.ratio * norm;
  if (norm == 0.0) return best;
  for (Index j = 0; j < n; ++j) {
    if (state.partition.role(j) != Role::Alpha) continue;
    const double h = mhat(j);
    const double xj = -state.qbar(j) - tau_new * state.pbar(j);
    double rho;
    PivotCase kind;
    if (h > thr) {
      rho = xj / h;
      kind = PivotCase::ExchangeToLower;
    } else if (h < -thr && std::isfinite(inst.u(j))) {
      rho = (inst.u(j) - xj) / -h;
      kind = PivotCase::ExchangeToUpper;
    } else {
      continue;
    }
    rho = std::max(rho, 0.0);
    if (rho < best.rho) {
      best.rho = rho;
      best.kind = kind;
      best.jbar = j;
    }
  }
  return best;
}

void apply_pivot(ParamState& state, const QpInstance& inst, const PivotDecision& d) {
  Partition& part = state.partition;
  switch (d.kind) {
    case PivotCase::ToUpper:
      part.set(d.ibar, Role::Gamma);
      state.basis->remove(d.ibar);
      add_column(inst.m, state.c, d.ibar, inst.u(d.ibar));
      break;
    case PivotCase::Enter:
      part.set(d.ibar, Role::Alpha);
      state.basis->add(d.ibar);
      break;
    case PivotCase::AtUpper:
      part.set(d.ibar, Role::Gamma);
      add_column(inst.m, state.c, d.ibar, inst.u(d.ibar));
      break;
    case PivotCase::ExchangeToLower:
      part.set(d.jbar, Role::Beta);
      part.set(d.ibar, Role::Alpha);
      state.basis->remove(d.jbar);
      state.basis->add(d.ibar);
      ++state.stats.two_by_two_pivots;
      break;
    case PivotCase::ExchangeToUpper:
      part.set(d.jbar, Role::Gamma);
      part.set(d.ibar, Role::Alpha);
      state.basis->remove(d.jbar);
      state.basis->add(d.ibar);
      add_column(inst.m, state.c, d.jbar, inst.u(d.jbar));
      ++state.stats.two_by_two_pivots;
      break;
    case PivotCase::Optimal:
    case PivotCase::Unbounded:
      return;
  }
  ++state.stats.pivots;
  state.tau_cur = d.tau_new;
}

Vector solution_at_tau(const ParamState& state, const QpInstance& inst, double tau) {
  const Index n = state.partition.size();
  Vector x = Vector::Zero(n);
  for (Index i = 0; i < n; ++i) {
    switch (state.partition.role(i)) {
      case Role::Alpha: x(i) = -state.qbar(i) - tau * state.pbar(i); break;
      case Role::Gamma: x(i) = inst.u(i); break;
      case Role::Beta: break;
    }
  }
  return x;
}

IndexSet start_violations(const Vector& q, const Vector& p, const Tolerances& tol) {
  const double thr = tol.ratio * inf_norm(p);
  const double qtol = tol.ratio * (1.0 + inf_norm(q));
  IndexSet bad;
  for (Index i = 0; i < q.size(); ++i) {
    if (p(i) <= thr && q(i) < -qtol) bad.push_back(i);
  }
  return bad;
}

namespace {

Vector clip(const Vector& x, const Vector& u) { return x.cwiseMax(0.0).cwiseMin(u); }

}  // namespace

SolveOutcome solve_psd(const QpInstance& inst, const Vector& p, const EngineOptions& opts) {
  inst.validate();
  const Tolerances& tol = opts.tol;
  const Index n = inst.size();
  if (p.size() != n) throw Error(ErrorKind::InvalidArgument, "parametric vector has the wrong length");
  for (Index i = 0; i < n; ++i) {
    if (!(inst.m(i, i) > 0.0)) throw Error(ErrorKind::PreconditionViolated, "diagonal entries must be positive");
  }
  if (!start_violations(inst.q, p, tol).empty()) {
    throw Error(ErrorKind::PreconditionViolated, "no tau0 with q + tau0 p >= 0");
  }

  ParamState state = initial_state(inst, tol);
  const double pivot_tol = tol.pivot * inst.m.scale();
  const Index cap = opts.iteration_cap_factor * n;
  Vector mhat;
  auto finish_stats = [&] {
    state.stats.flops += state.basis->flops();
    state.stats.refactorizations = state.basis->refactorizations();
  };

  while (true) {
    state.basis->bars(state.c, p, state.qbar, state.pbar);
    state.stats.flops += 4 * n;
    const RatioDecision first = ratio_test_tau(state, inst.u, tol);
    PivotDecision decision{first.kind, first.index, -1, first.tau_new, 0.0};
    double schur = kInf;

    if (first.kind == PivotCase::Optimal) {
      if (opts.observer) opts.observer(IterationRecord{state, decision, schur});
      Vector x = clip(solution_at_tau(state, inst, 0.0), inst.u);
      finish_stats();
      return SolveOutcome::optimal(inst, std::move(x), state.stats);
    }
    if (state.stats.pivots >= cap) {
      throw Error(ErrorKind::IterationCap, "pivot count exceeded 3n");
    }
    if (first.kind == PivotCase::Enter) {
      schur = state.basis->border(first.index, mhat);
      if (!(schur > pivot_tol)) {
        const SecondDecision second = second_ratio_test(state, inst, first.index, first.tau_new, mhat, tol);
        decision.kind = second.kind;
        decision.jbar = second.jbar;
        decision.rho = second.rho;
      }
    }
    if (opts.observer) opts.observer(IterationRecord{state, decision, schur});

    if (decision.kind == PivotCase::Unbounded) {
      Vector d = Vector::Zero(n);
      const double thr = tol.ratio * inf_norm(mhat);
      for (Index j = 0; j < n; ++j) {
        if (state.partition.role(j) == Role::Alpha && std::abs(mhat(j)) > thr) d(j) = -mhat(j);
      }
      d(first.index) = 1.0;
      d /= inf_norm(d);
      finish_stats();
      return SolveOutcome::unbounded(Ray{std::move(d), first.index}, state.stats);
    }
    apply_pivot(state, inst, decision);
  }
}

SolveOutcome solve_pd(const QpInstance& inst, const Vector& p, const EngineOptions& opts) {
  inst.validate();
  if (!is_pd(inst.m, opts.tol.pivot)) throw Error(ErrorKind::PreconditionViolated, "matrix is not positive definite");
  if (p.size() != inst.size() || (p.size() > 0 && !(p.minCoeff() > 0.0))) {
    throw Error(ErrorKind::PreconditionViolated, "parametric vector must be positive");
  }
  return solve_psd(inst, p, opts);
}

}  // namespace pppa
