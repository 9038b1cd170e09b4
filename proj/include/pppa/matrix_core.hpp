#pragma once

#include "pppa/sym_matrix.hpp"
#include "pppa/types.hpp"

#include <cstdint>
#include <vector>

namespace pppa {

/// Diagonal kept, off-diagonal entries replaced by -|m_ij|.
SymMatrix comparison_matrix(const SymMatrix& m);

/// Ascending indices of [0, n) not in `alpha`.
IndexSet complement(Index n, const IndexSet& alpha);

/// (M / M_aa) = M_bb - M_ba M_aa^{-1} M_ab with b the ascending complement of
/// alpha. Throws SingularBlock when M_aa fails the pivoted Cholesky test.
/// The Schur complement of a tridiagonal matrix is tridiagonal in the
/// complement's order and is returned with tridiagonal storage.
SymMatrix schur_complement(const SymMatrix& m, const IndexSet& alpha, const Tolerances& tol = {});

struct PptResult {
  Vector transformed_vector;
  /// Block matrix laid out in the original index positions:
  ///   (a,a) = M_aa^{-1}, (a,b) = -M_aa^{-1} M_ab, (b,a) = M_ba M_aa^{-1}, (b,b) = (M/M_aa).
  Matrix transformed_matrix;
};

PptResult principal_pivot_transform(const SymMatrix& m, const Vector& r, const IndexSet& alpha,
                                    const Tolerances& tol = {});

/// Outcome of symmetric elimination with diagonal pivoting.
struct PivotedLdl {
  IndexSet order;  // elimination order; the first `rank` entries were pivoted on
  Vector pivots;   // pivots in elimination order, length `rank`
  Index rank = 0;
  bool psd = true;
};

/// Pivoted LDL^T. Elimination continues while the largest remaining diagonal
/// exceeds `zero_tol`; the leftover block is then tested against `neg_tol`.
PivotedLdl pivoted_ldl(const Matrix& a, double zero_tol, double neg_tol);

/// True iff pivoted Cholesky completes with every pivot >= -tol * scale(M).
bool is_psd(const SymMatrix& m, double tol = 1e-9);
/// True iff every pivot of the Cholesky factorization exceeds tol * scale(M).
bool is_pd(const SymMatrix& m, double tol = 1e-10);
/// Determinant as the product of LDL^T pivots.
double ldl_determinant(const SymMatrix& m);

/// Connected components of the graph {(i,j) : m_ij != 0, i != j}; each
/// component ascending, components ordered by their smallest index.
std::vector<IndexSet> irreducible_components(const SymMatrix& m);

enum class Direction { Add, Remove };

/// Explicit inverse of the principal block M_aa, maintained under single
/// index insertions and deletions by the bordered-inverse formulas.
class FactorState {
 public:
  FactorState() = default;
  /// Empty basis for matrices of order n.
  explicit FactorState(Index n);
  /// Factorizes M_aa from scratch.
  FactorState(const SymMatrix& m, IndexSet alpha, const Tolerances& tol = {});

  const IndexSet& alpha() const noexcept { return alpha_; }
  Index basis_size() const noexcept { return static_cast<Index>(alpha_.size()); }
  /// Position of index i inside alpha(), or -1.
  Index position(Index i) const { return pos_[i]; }
  bool contains(Index i) const { return pos_[i] >= 0; }

  /// Inverse of M_aa with rows and columns in alpha() order.
  Eigen::Block<const Matrix> inverse() const { return buf_.topLeftCorner(basis_size(), basis_size()); }

  Index refresh_counter() const noexcept { return refresh_counter_; }
  Index refactorizations() const noexcept { return refactorizations_; }
  std::int64_t flops() const noexcept { return flops_; }

  /// M_aa^{-1} M_{a,i}, in alpha() order.
  Vector border_solve(const SymMatrix& m, Index i) const;
  /// m_ii - M_ia M_aa^{-1} M_ai given the border solve above.
  double schur_scalar(const SymMatrix& m, Index i, const Vector& border) const;

  void add(const SymMatrix& m, Index i, const Tolerances& tol = {});
  void remove(const SymMatrix& m, Index i, const Tolerances& tol = {});
  void refactor(const SymMatrix& m, const Tolerances& tol = {});

  /// max |(M_aa^{-1} M_aa - I)_{ij}|, O(|a|^3); for tests and diagnostics.
  double residual(const SymMatrix& m) const;

 private:
  void maybe_refresh(const SymMatrix& m, const Tolerances& tol);
  double probe_residual(const SymMatrix& m) const;

  Matrix buf_;
  IndexSet alpha_;
  std::vector<Index> pos_;
  Index refresh_counter_ = 0;
  Index refactorizations_ = 0;
  std::int64_t flops_ = 0;
};

FactorState factor_update(const SymMatrix& m, FactorState f, Index i, Direction direction,
                          const Tolerances& tol = {});

/// Solves M_aa y = rhs_a for tridiagonal M by elimination along each maximal
/// run of consecutive indices in alpha. `alpha` must be strictly increasing;
/// `rhs` has length n; the result has length |alpha| in alpha order.
Vector tridiag_solve(const SymMatrix& m, const IndexSet& alpha, const Vector& rhs, const Tolerances& tol = {});

/// Run-wise tridiagonal solve on the membership mask `in_alpha`. Columns of
/// `rhs` and `out` are length-n; entries outside alpha are left untouched in
/// `out`. Returns the number of floating point operations performed.
std::int64_t tridiag_solve_masked(const SymMatrix& m, const std::vector<char>& in_alpha, const Matrix& rhs,
                                  Matrix& out, const Tolerances& tol = {});

}  // namespace pppa
