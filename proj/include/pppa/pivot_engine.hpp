#pragma once

#include "pppa/matrix_core.hpp"
#include "pppa/qp.hpp"

#include <functional>
#include <memory>

namespace pppa {

enum class Role : char { Alpha, Beta, Gamma };

/// Disjoint cover (alpha, beta, gamma) of [n]: basic, at lower bound, at upper bound.
class Partition {
 public:
  explicit Partition(Index n = 0);

  Index size() const noexcept { return static_cast<Index>(role_.size()); }
  Role role(Index i) const { return role_[i]; }
  void set(Index i, Role r);
  Index count(Role r) const { return counts_[static_cast<int>(r)]; }

  IndexSet alpha() const { return members(Role::Alpha); }
  IndexSet beta() const { return members(Role::Beta); }
  IndexSet gamma() const { return members(Role::Gamma); }
  IndexSet members(Role r) const;

 private:
  std::vector<Role> role_;
  Index counts_[3] = {0, 0, 0};
};

/// Solves with the basic block M_aa while alpha changes one index at a time.
class BasisSolver {
 public:
  virtual ~BasisSolver() = default;
  virtual void add(Index i) = 0;
  virtual void remove(Index i) = 0;
  virtual bool contains(Index i) const = 0;
  /// Full-length qbar and pbar: M_aa^{-1}(c_a, p_a) on alpha, and
  /// (c_i, p_i) - M_ia (qbar_a, pbar_a) elsewhere.
  virtual void bars(const Vector& c, const Vector& p, Vector& qbar, Vector& pbar) = 0;
  /// Writes M_aa^{-1} M_{a,i} into `mhat` (length n, zero off alpha) and
  /// returns m_ii - M_ia M_aa^{-1} M_ai.
  virtual double border(Index i, Vector& mhat) = 0;
  virtual std::int64_t flops() const = 0;
  virtual Index refactorizations() const { return 0; }
};

/// Explicit inverse of M_aa kept by bordered updates.
class DenseInverseBasis final : public BasisSolver {
 public:
  DenseInverseBasis(const SymMatrix& m, const Tolerances& tol);
  void add(Index i) override;
  void remove(Index i) override;
  bool contains(Index i) const override { return factor_.contains(i); }
  void bars(const Vector& c, const Vector& p, Vector& qbar, Vector& pbar) override;
  double border(Index i, Vector& mhat) override;
  std::int64_t flops() const override { return flops_ + factor_.flops(); }
  Index refactorizations() const override { return factor_.refactorizations(); }
  const FactorState& factor() const { return factor_; }

 private:
  const SymMatrix& m_;
  Tolerances tol_;
  FactorState factor_;
  std::int64_t flops_ = 0;
};

/// Linear-time solves for tridiagonal M; alpha is a membership mask and each
/// maximal run of consecutive basic indices is eliminated separately.
class TridiagonalBasis final : public BasisSolver {
 public:
  TridiagonalBasis(const SymMatrix& m, const Tolerances& tol);
  void add(Index i) override { in_[i] = 1; }
  void remove(Index i) override { in_[i] = 0; }
  bool contains(Index i) const override { return in_[i] != 0; }
  void bars(const Vector& c, const Vector& p, Vector& qbar, Vector& pbar) override;
  double border(Index i, Vector& mhat) override;
  std::int64_t flops() const override { return flops_; }

 private:
  const SymMatrix& m_;
  Tolerances tol_;
  std::vector<char> in_;
  Matrix rhs_;
  Matrix out_;
  std::int64_t flops_ = 0;
};

std::unique_ptr<BasisSolver> make_basis_solver(const SymMatrix& m, const Tolerances& tol = {});

struct ParamState {
  Partition partition;
  double tau_cur = kInf;
  Vector c;  // q + M_{:,gamma} u_gamma
  Vector qbar;
  Vector pbar;
  std::unique_ptr<BasisSolver> basis;
  SolveStats stats;
};

/// alpha = gamma = empty, tau = +inf.
ParamState initial_state(const QpInstance& inst, const Tolerances& tol = {});

struct Bars {
  Vector qbar;
  Vector pbar;
};

/// Bars for an arbitrary partition; `basis` must hold exactly partition.alpha().
Bars compute_bars(const QpInstance& inst, const Partition& partition, const Vector& p, BasisSolver& basis);

enum class PivotCase {
  Optimal,          // tau reached 0
  ToUpper,          // basic index reaches its upper bound
  Enter,            // nonbasic index enters with a positive Schur diagonal
  AtUpper,          // zero Schur diagonal, entering index moves straight to its upper bound
  ExchangeToLower,  // zero Schur diagonal, entering index swaps with a basic index leaving at 0
  ExchangeToUpper,  // zero Schur diagonal, entering index swaps with a basic index leaving at u
  Unbounded,
};

const char* to_string(PivotCase c);

struct RatioDecision {
  double tau_new = 0.0;
  PivotCase kind = PivotCase::Optimal;  // Optimal, ToUpper or Enter (from lower)
  Index index = -1;
};

/// First ratio test over beta (w reaches 0) and finite-bounded alpha (x reaches u).
RatioDecision ratio_test_tau(const ParamState& state, const Vector& u, const Tolerances& tol = {});

struct SecondDecision {
  double rho = kInf;
  PivotCase kind = PivotCase::Unbounded;  // AtUpper, ExchangeToLower, ExchangeToUpper or Unbounded
  Index jbar = -1;
};

/// Ratio test along x_a = -qbar_a - tau pbar_a - mhat t as t = x_ibar grows.
SecondDecision second_ratio_test(const ParamState& state, const QpInstance& inst, Index ibar, double tau_new,
                                 const Vector& mhat, const Tolerances& tol = {});

struct PivotDecision {
  PivotCase kind = PivotCase::Optimal;
  Index ibar = -1;
  Index jbar = -1;
  double tau_new = 0.0;
  double rho = 0.0;
};

/// Applies the index-set update and the matching basis and shift updates.
void apply_pivot(ParamState& state, const QpInstance& inst, const PivotDecision& decision);

/// x_beta = 0, x_gamma = u_gamma, x_alpha = -qbar_alpha - tau pbar_alpha.
Vector solution_at_tau(const ParamState& state, const QpInstance& inst, double tau);

/// Indices with p_i at or below the ratio threshold and q_i clearly negative.
IndexSet start_violations(const Vector& q, const Vector& p, const Tolerances& tol = {});

struct IterationRecord {
  const ParamState& state;  // bars computed, partition not yet updated
  const PivotDecision& decision;
  double schur = kInf;  // Schur diagonal at the entering index when one was computed
};

struct EngineOptions {
  Tolerances tol;
  std::function<void(const IterationRecord&)> observer;
  Index iteration_cap_factor = 3;
};

/// Parametric principal pivoting for psd M with positive diagonal and an
/// n-step vector p. Throws PreconditionViolated or IterationCap.
SolveOutcome solve_psd(const QpInstance& inst, const Vector& p, const EngineOptions& opts = {});

/// Same iteration after checking that M is positive definite and p > 0.
SolveOutcome solve_pd(const QpInstance& inst, const Vector& p, const EngineOptions& opts = {});

}  // namespace pppa
