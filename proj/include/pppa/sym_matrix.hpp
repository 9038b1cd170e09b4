#pragma once

#include "pppa/types.hpp"

namespace pppa {

enum class Structure { Dense, Tridiagonal };

/// Real symmetric matrix. Dense matrices keep a full square array whose two
/// triangles are written together, so value(i,j) == value(j,i) exactly.
/// Tridiagonal matrices keep only the diagonal and the off-diagonal band.
class SymMatrix {
 public:
  SymMatrix() = default;

  /// Dense zero matrix of order n.
  explicit SymMatrix(Index n);

  /// Takes the lower triangle of `a` and mirrors it.
  static SymMatrix from_dense(const Matrix& a);
  static SymMatrix identity(Index n);
  /// `off(i)` couples i and i+1; off.size() == max(diag.size() - 1, 0).
  static SymMatrix tridiagonal(Vector diag, Vector off);

  Index size() const noexcept { return n_; }
  Structure structure() const noexcept { return structure_; }
  bool is_tridiagonal() const noexcept { return structure_ == Structure::Tridiagonal; }

  double operator()(Index i, Index j) const;
  void set(Index i, Index j, double value);

  /// Full square copy.
  Matrix dense() const;
  /// Direct access to the square array; only valid for dense storage.
  const Matrix& dense_ref() const;

  Vector diagonal() const;
  /// Tridiagonal band storage; only valid for tridiagonal storage.
  const Vector& band_diag() const;
  const Vector& band_off() const;

  /// max |m_ii|, the reference magnitude for relative tolerances.
  double scale() const;

  /// Principal submatrix on `idx` (in the given order). Tridiagonal storage is
  /// kept when `idx` is strictly increasing.
  SymMatrix principal(const IndexSet& idx) const;

  /// Converts to tridiagonal storage if every entry with |i-j| > 1 is zero.
  SymMatrix as_tridiagonal_if_banded() const;
  SymMatrix as_dense() const;

  Vector multiply(const Vector& x) const;
  double quadratic_form(const Vector& x) const;

  /// Nonzero off-diagonal count over the strict lower triangle.
  Index offdiag_nonzeros() const;

  friend bool operator==(const SymMatrix& a, const SymMatrix& b);

 private:
  Index n_ = 0;
  Structure structure_ = Structure::Dense;
  Matrix full_;
  Vector diag_;
  Vector off_;
};

}  // namespace pppa
