#include "pppa/sym_matrix.hpp"

#include <algorithm>
#include <cmath>

namespace pppa {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::SingularBlock: return "SingularBlock";
    case ErrorKind::SingularPivot: return "SingularPivot";
    case ErrorKind::NotApplicable: return "NotApplicable";
    case ErrorKind::NegativeComponent: return "NegativeComponent";
    case ErrorKind::TooLarge: return "TooLarge";
    case ErrorKind::PreconditionViolated: return "PreconditionViolated";
    case ErrorKind::IterationCap: return "IterationCap";
    case ErrorKind::ClassificationFailed: return "ClassificationFailed";
    case ErrorKind::InvariantViolation: return "InvariantViolation";
    case ErrorKind::RecursionCapExceeded: return "RecursionCapExceeded";
    case ErrorKind::GenerationFailed: return "GenerationFailed";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

SymMatrix::SymMatrix(Index n) : n_(n), structure_(Structure::Dense), full_(Matrix::Zero(n, n)) {
  if (n < 0) throw Error(ErrorKind::InvalidArgument, "negative dimension");
}

SymMatrix SymMatrix::from_dense(const Matrix& a) {
  if (a.rows() != a.cols()) throw Error(ErrorKind::InvalidArgument, "matrix is not square");
  SymMatrix m(a.rows());
  m.full_.triangularView<Eigen::Lower>() = a.triangularView<Eigen::Lower>();
  m.full_.triangularView<Eigen::StrictlyUpper>() = a.transpose().triangularView<Eigen::StrictlyUpper>();
  return m;
}

SymMatrix SymMatrix::identity(Index n) {
  SymMatrix m(n);
  m.full_.setIdentity();
  return m;
}

SymMatrix SymMatrix::tridiagonal(Vector diag, Vector off) {
  const Index n = diag.size();
  if (off.size() != std::max<Index>(n - 1, 0)) {
    throw Error(ErrorKind::InvalidArgument, "tridiagonal band has wrong length");
  }
  SymMatrix m;
  m.n_ = n;
  m.structure_ = Structure::Tridiagonal;
  m.diag_ = std::move(diag);
  m.off_ = std::move(off);
  return m;
}

double SymMatrix::operator()(Index i, Index j) const {
  if (structure_ == Structure::Dense) return full_(i, j);
  if (i == j) return diag_(i);
  if (i == j + 1) return off_(j);
  if (j == i + 1) return off_(i);
  return 0.0;
}

void SymMatrix::set(Index i, Index j, double value) {
  if (structure_ == Structure::Dense) {
    full_(i, j) = value;
    full_(j, i) = value;
    return;
  }
  if (i == j) {
    diag_(i) = value;
  } else if (std::abs(i - j) == 1) {
    off_(std::min(i, j)) = value;
  } else if (value != 0.0) {
    throw Error(ErrorKind::InvalidArgument, "entry outside the tridiagonal band");
  }
}

Matrix SymMatrix::dense() const {
  if (structure_ == Structure::Dense) return full_;
  Matrix a = Matrix::Zero(n_, n_);
  for (Index i = 0; i < n_; ++i) {
    a(i, i) = diag_(i);
    if (i + 1 < n_) {
      a(i, i + 1) = off_(i);
      a(i + 1, i) = off_(i);
    }
  }
  return a;
}

const Matrix& SymMatrix::dense_ref() const {
  if (structure_ != Structure::Dense) throw Error(ErrorKind::InvalidArgument, "matrix is not stored densely");
  return full_;
}

Vector SymMatrix::diagonal() const {
  return structure_ == Structure::Dense ? Vector(full_.diagonal()) : diag_;
}

const Vector& SymMatrix::band_diag() const {
  if (structure_ != Structure::Tridiagonal) throw Error(ErrorKind::InvalidArgument, "matrix is not tridiagonal");
  return diag_;
}

const Vector& SymMatrix::band_off() const {
  if (structure_ != Structure::Tridiagonal) throw Error(ErrorKind::InvalidArgument, "matrix is not tridiagonal");
  return off_;
}

double SymMatrix::scale() const {
  if (n_ == 0) return 0.0;
  return inf_norm(diagonal());
}

SymMatrix SymMatrix::principal(const IndexSet& idx) const {
  const Index m = static_cast<Index>(idx.size());
  const bool increasing = std::is_sorted(idx.begin(), idx.end()) &&
                          std::adjacent_find(idx.begin(), idx.end()) == idx.end();
  if (structure_ == Structure::Tridiagonal && increasing) {
    Vector d(m);
    Vector e(std::max<Index>(m - 1, 0));
    for (Index a = 0; a < m; ++a) {
      d(a) = diag_(idx[a]);
      if (a + 1 < m) e(a) = (*this)(idx[a], idx[a + 1]);
    }
    return tridiagonal(std::move(d), std::move(e));
  }
  SymMatrix s(m);
  for (Index a = 0; a < m; ++a) {
    for (Index b = 0; b <= a; ++b) s.set(a, b, (*this)(idx[a], idx[b]));
  }
  return s;
}

SymMatrix SymMatrix::as_tridiagonal_if_banded() const {
  if (structure_ == Structure::Tridiagonal) return *this;
  for (Index j = 0; j < n_; ++j) {
    for (Index i = j + 2; i < n_; ++i) {
      if (full_(i, j) != 0.0) return *this;
    }
  }
  Vector e(std::max<Index>(n_ - 1, 0));
  for (Index i = 0; i + 1 < n_; ++i) e(i) = full_(i + 1, i);
  return tridiagonal(full_.diagonal(), std::move(e));
}

SymMatrix SymMatrix::as_dense() const {
  if (structure_ == Structure::Dense) return *this;
  return from_dense(dense());
}

Vector SymMatrix::multiply(const Vector& x) const {
  if (structure_ == Structure::Dense) return full_ * x;
  Vector y = diag_.cwiseProduct(x);
  for (Index i = 0; i + 1 < n_; ++i) {
    y(i) += off_(i) * x(i + 1);
    y(i + 1) += off_(i) * x(i);
  }
  return y;
}

double SymMatrix::quadratic_form(const Vector& x) const { return x.dot(multiply(x)); }

Index SymMatrix::offdiag_nonzeros() const {
  Index count = 0;
  if (structure_ == Structure::Tridiagonal) {
    for (Index i = 0; i < off_.size(); ++i) count += off_(i) != 0.0;
    return count;
  }
  for (Index j = 0; j < n_; ++j) {
    for (Index i = j + 1; i < n_; ++i) count += full_(i, j) != 0.0;
  }
  return count;
}

bool operator==(const SymMatrix& a, const SymMatrix& b) {
  if (a.n_ != b.n_ || a.structure_ != b.structure_) return false;
  if (a.structure_ == Structure::Dense) return a.full_ == b.full_;
  return a.diag_ == b.diag_ && a.off_ == b.off_;
}

}  // namespace pppa
