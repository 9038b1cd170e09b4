#include "pppa/classify.hpp"

#include "pppa/matrix_core.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>

namespace pppa {

bool is_z_matrix(const SymMatrix& m) {
  const Index n = m.size();
  if (m.is_tridiagonal()) return n < 2 || m.band_off().maxCoeff() <= 0.0;
  const Matrix& a = m.dense_ref();
  for (Index j = 0; j < n; ++j) {
    for (Index i = j + 1; i < n; ++i) {
      if (a(i, j) > 0.0) return false;
    }
  }
  return true;
}

bool is_in_sbar_plus(const SymMatrix& m, double tol) { return is_psd(comparison_matrix(m), tol); }

Vector find_dominance_vector(const SymMatrix& mbar, const Tolerances& tol) {
  const Index n = mbar.size();
  if (n == 0) return Vector();
  if (!is_z_matrix(mbar)) throw Error(ErrorKind::NotApplicable, "matrix has a positive off-diagonal entry");
  const double scale = mbar.scale();
  const Index last = n - 1;

  // Pin d_n = 1 and solve the leading block for the remaining components.
  Vector head;
  try {
    if (mbar.is_tridiagonal()) {
      IndexSet lead(static_cast<std::size_t>(last));
      for (Index i = 0; i < last; ++i) lead[i] = i;
      Vector rhs = Vector::Zero(n);
      if (last > 0) rhs(last - 1) = -mbar(last - 1, last);
      head = tridiag_solve(mbar, lead, rhs, tol);
    } else {
      const Matrix& a = mbar.dense_ref();
      Eigen::LLT<Matrix> llt(a.topLeftCorner(last, last));
      if (last > 0 && llt.info() != Eigen::Success) throw Error(ErrorKind::SingularPivot, "leading block");
      head = last > 0 ? Vector(llt.solve(-a.col(last).head(last))) : Vector();
    }
  } catch (const Error&) {
    throw Error(ErrorKind::NotApplicable, "leading block of the comparison matrix is not positive definite");
  }
  double s = mbar(last, last);
  for (Index i = 0; i < last; ++i) s += mbar(i, last) * head(i);

  Vector d(n);
  if (std::abs(s) <= tol.kernel * scale) {
    d.head(last) = head;
    d(last) = 1.0;
  } else if (s > 0.0) {
    if (mbar.is_tridiagonal()) {
      IndexSet all(static_cast<std::size_t>(n));
      for (Index i = 0; i < n; ++i) all[i] = i;
      d = tridiag_solve(mbar, all, Vector::Ones(n), tol);
    } else {
      d = mbar.dense_ref().llt().solve(Vector::Ones(n));
    }
  } else {
    throw Error(ErrorKind::NotApplicable, "comparison matrix is not positive semidefinite");
  }
  const double big = inf_norm(d);
  if (!(d.minCoeff() > tol.positive * big)) {
    throw Error(ErrorKind::NotApplicable, "dominance vector is not strictly positive");
  }
  return d;
}

Vector dominance_vector(const SymMatrix& m, const Tolerances& tol) {
  const SymMatrix mbar = comparison_matrix(m);
  Vector d(m.size());
  for (const IndexSet& block : irreducible_components(mbar)) {
    const Vector db = find_dominance_vector(mbar.principal(block), tol);
    for (Index a = 0; a < db.size(); ++a) d(block[a]) = db(a);
  }
  return d;
}

Vector build_parametric_vector(const SymMatrix& m, const Vector& d, const Tolerances& tol) {
  const Index n = m.size();
  if (d.size() != n) throw Error(ErrorKind::InvalidArgument, "dominance vector has the wrong length");
  Vector p(n);
  if (m.is_tridiagonal()) {
    const Vector& e = m.band_off();
    p = m.band_diag().cwiseProduct(d);
    for (Index i = 0; i + 1 < n; ++i) {
      const double neg = std::min(e(i), 0.0);
      p(i) += neg * d(i + 1);
      p(i + 1) += neg * d(i);
    }
  } else {
    const Matrix& a = m.dense_ref();
    for (Index i = 0; i < n; ++i) {
      double s = 0.0;
      for (Index j = 0; j < n; ++j) {
        if (j != i) s += std::min(a(j, i), 0.0) * d(j);
      }
      p(i) = a(i, i) * d(i) + s;
    }
  }
  const double magnitude = std::max(m.scale(), 1e-300) * inf_norm(d);
  const double slack = tol.psd * magnitude;
  const double noise = 16.0 * static_cast<double>(n) * std::numeric_limits<double>::epsilon() * magnitude;
  for (Index i = 0; i < n; ++i) {
    if (p(i) < -slack) throw Error(ErrorKind::NegativeComponent, "parametric vector has a negative component");
    if (p(i) <= noise) p(i) = 0.0;
  }
  return p;
}

namespace {

double binomial(Index n, Index k) {
  double c = 1.0;
  for (Index i = 1; i <= k; ++i) c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
  return c;
}

}  // namespace

bool is_sbar_nk(const SymMatrix& m, int k, double tol) {
  const Index n = m.size();
  if (k < 0) throw Error(ErrorKind::InvalidArgument, "k must be nonnegative");
  if (!is_psd(m, tol)) return false;
  if (k == 0) return is_in_sbar_plus(m, tol);
  if (k >= n) return true;
  if (binomial(n, k) > 1e6) throw Error(ErrorKind::TooLarge, "too many principal submatrices to enumerate");

  // Enumerate the k removed indices in lexicographic order.
  IndexSet drop(static_cast<std::size_t>(k));
  for (int a = 0; a < k; ++a) drop[a] = a;
  while (true) {
    if (!is_in_sbar_plus(m.principal(complement(n, drop)), tol)) return false;
    int a = k - 1;
    while (a >= 0 && drop[a] == n - k + a) --a;
    if (a < 0) break;
    ++drop[a];
    for (int b = a + 1; b < k; ++b) drop[b] = drop[b - 1] + 1;
  }
  return true;
}

ClassReport classify(const SymMatrix& m, int max_k, const Tolerances& tol) {
  ClassReport r;
  r.blocks = irreducible_components(m);
  r.is_irreducible = r.blocks.size() <= 1;
  r.is_z = is_z_matrix(m);
  r.is_psd = is_psd(m, tol.psd);
  r.is_pd = r.is_psd && is_pd(m, tol.pivot);
  r.is_sbar_plus = is_in_sbar_plus(m, tol.psd);
  if (r.is_sbar_plus) {
    try {
      Vector d = dominance_vector(m, tol);
      r.p = build_parametric_vector(m, d, tol);
      r.d = std::move(d);
    } catch (const Error&) {
      r.d.reset();
      r.p.reset();
    }
  }
  if (r.is_psd) {
    for (int k = 0; k <= max_k; ++k) {
      try {
        if (is_sbar_nk(m, k, tol.psd)) {
          r.k_level = k;
          break;
        }
      } catch (const Error&) {
        break;
      }
    }
  }
  return r;
}

}  // namespace pppa
