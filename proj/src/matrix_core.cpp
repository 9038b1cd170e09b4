#include "pppa/matrix_core.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <queue>

namespace pppa {

SymMatrix comparison_matrix(const SymMatrix& m) {
  if (m.is_tridiagonal()) {
    return SymMatrix::tridiagonal(m.band_diag(), -m.band_off().cwiseAbs());
  }
  const Index n = m.size();
  SymMatrix c(n);
  for (Index j = 0; j < n; ++j) {
    c.set(j, j, m(j, j));
    for (Index i = j + 1; i < n; ++i) c.set(i, j, -std::abs(m(i, j)));
  }
  return c;
}

IndexSet complement(Index n, const IndexSet& alpha) {
  std::vector<char> in(static_cast<std::size_t>(n), 0);
  for (Index i : alpha) in[i] = 1;
  IndexSet rest;
  rest.reserve(static_cast<std::size_t>(n) - alpha.size());
  for (Index i = 0; i < n; ++i) {
    if (!in[i]) rest.push_back(i);
  }
  return rest;
}

namespace {

Matrix gather(const SymMatrix& m, const IndexSet& rows, const IndexSet& cols) {
  Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  for (Index b = 0; b < out.cols(); ++b) {
    for (Index a = 0; a < out.rows(); ++a) out(a, b) = m(rows[a], cols[b]);
  }
  return out;
}

// Cholesky of M_aa after confirming it is numerically positive definite.
Eigen::LLT<Matrix> checked_llt(const SymMatrix& m, const IndexSet& alpha, const Tolerances& tol) {
  const Matrix block = gather(m, alpha, alpha);
  const double zero_tol = tol.pivot * std::max(m.scale(), 1e-300);
  const PivotedLdl ldl = pivoted_ldl(block, zero_tol, 0.0);
  if (ldl.rank < static_cast<Index>(alpha.size())) {
    throw Error(ErrorKind::SingularBlock, "principal block fails the nonsingularity test");
  }
  Eigen::LLT<Matrix> llt(block);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::SingularBlock, "principal block is not positive definite");
  return llt;
}

// Symmetric tridiagonal solve on rows [s, e] for every column of rhs.
std::int64_t thomas_run(const Vector& d, const Vector& off, Index s, Index e, Eigen::Ref<Matrix> x,
                        double zero_tol) {
  const Index len = e - s + 1;
  const Index k = x.cols();
  if (len == 1) {
    if (d(s) <= zero_tol) throw Error(ErrorKind::SingularPivot, "nonpositive tridiagonal pivot");
    x.row(0) /= d(s);
    return k;
  }
  // Forward elimination keeps the modified pivots in a scratch vector.
  Vector piv(len);
  piv(0) = d(s);
  if (piv(0) <= zero_tol) throw Error(ErrorKind::SingularPivot, "nonpositive tridiagonal pivot");
  for (Index a = 1; a < len; ++a) {
    const double l = off(s + a - 1) / piv(a - 1);
    piv(a) = d(s + a) - l * off(s + a - 1);
    if (piv(a) <= zero_tol) throw Error(ErrorKind::SingularPivot, "nonpositive tridiagonal pivot");
    x.row(a) -= l * x.row(a - 1);
  }
  x.row(len - 1) /= piv(len - 1);
  for (Index a = len - 2; a >= 0; --a) {
    x.row(a) = (x.row(a) - off(s + a) * x.row(a + 1)) / piv(a);
  }
  return (3 + 5 * k) * len;
}

}  // namespace

PivotedLdl pivoted_ldl(const Matrix& a, double zero_tol, double neg_tol) {
  const Index n = a.rows();
  Matrix w = a;
  PivotedLdl out;
  out.order.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) out.order[i] = i;
  std::vector<double> piv;
  Index k = 0;
  for (; k < n; ++k) {
    Index best = k;
    for (Index i = k + 1; i < n; ++i) {
      if (w(i, i) > w(best, best)) best = i;
    }
    if (!(w(best, best) > zero_tol)) break;
    if (best != k) {
      w.row(k).swap(w.row(best));
      w.col(k).swap(w.col(best));
      std::swap(out.order[k], out.order[best]);
    }
    const double p = w(k, k);
    piv.push_back(p);
    const Index rest = n - k - 1;
    if (rest > 0) {
      const Vector col = w.col(k).tail(rest);
      w.bottomRightCorner(rest, rest).noalias() -= (col / p) * col.transpose();
    }
  }
  out.rank = k;
  out.pivots = Eigen::Map<Vector>(piv.data(), static_cast<Index>(piv.size()));
  // Leftover block must vanish (up to the slack) for a psd matrix.
  const Index rest = n - k;
  if (rest > 0) {
    const auto r = w.bottomRightCorner(rest, rest);
    const double off_tol = std::sqrt(std::max(neg_tol, 0.0) * std::max(std::abs(zero_tol), neg_tol)) + neg_tol;
    for (Index j = 0; j < rest && out.psd; ++j) {
      if (r(j, j) < -neg_tol) out.psd = false;
      for (Index i = j + 1; i < rest; ++i) {
        if (std::abs(r(i, j)) > off_tol) {
          out.psd = false;
          break;
        }
      }
    }
  }
  return out;
}

bool is_psd(const SymMatrix& m, double tol) {
  const Index n = m.size();
  const double scale = m.scale();
  const double slack = tol * scale;
  if (m.is_tridiagonal()) {
    const Vector& d = m.band_diag();
    const Vector& e = m.band_off();
    double carry = 0.0;  // amount subtracted from the next diagonal
    for (Index i = 0; i < n; ++i) {
      const double piv = d(i) - carry;
      carry = 0.0;
      if (piv < -slack) return false;
      if (i + 1 == n) break;
      if (piv > slack) {
        carry = e(i) * e(i) / piv;
      } else if (std::abs(e(i)) > std::sqrt(tol) * scale) {
        return false;
      }
    }
    return true;
  }
  if (scale == 0.0) return m.dense_ref().isZero(0.0);
  return pivoted_ldl(m.dense_ref(), slack, slack).psd;
}

bool is_pd(const SymMatrix& m, double tol) {
  const Index n = m.size();
  const double zero_tol = tol * m.scale();
  if (n == 0) return true;
  if (m.scale() == 0.0) return false;
  if (m.is_tridiagonal()) {
    const Vector& d = m.band_diag();
    const Vector& e = m.band_off();
    double piv = d(0);
    for (Index i = 0; i < n; ++i) {
      if (!(piv > zero_tol)) return false;
      if (i + 1 < n) piv = d(i + 1) - e(i) * e(i) / piv;
    }
    return true;
  }
  return pivoted_ldl(m.dense_ref(), zero_tol, 0.0).rank == n;
}

double ldl_determinant(const SymMatrix& m) {
  const Matrix a = m.dense();
  const PivotedLdl ldl = pivoted_ldl(a, 0.0, 0.0);
  if (ldl.rank < m.size()) return 0.0;
  return ldl.pivots.prod();
}

SymMatrix schur_complement(const SymMatrix& m, const IndexSet& alpha, const Tolerances& tol) {
  const Index n = m.size();
  if (alpha.empty()) return m;
  IndexSet sorted = alpha;
  std::sort(sorted.begin(), sorted.end());
  const IndexSet rest = complement(n, sorted);

  if (m.is_tridiagonal()) {
    const Vector& d = m.band_diag();
    const Vector& e = m.band_off();
    std::vector<char> in(static_cast<std::size_t>(n), 0);
    for (Index i : sorted) in[i] = 1;
    // Position of each complement index in the result.
    std::vector<Index> at(static_cast<std::size_t>(n), -1);
    for (Index a = 0; a < static_cast<Index>(rest.size()); ++a) at[rest[a]] = a;
    const Index r = static_cast<Index>(rest.size());
    Vector sd(r);
    Vector se(std::max<Index>(r - 1, 0));
    for (Index a = 0; a < r; ++a) {
      sd(a) = d(rest[a]);
      if (a + 1 < r) se(a) = rest[a + 1] == rest[a] + 1 ? e(rest[a]) : 0.0;
    }
    const double zero_tol = tol.pivot * m.scale();
    for (Index s = 0; s < n;) {
      if (!in[s]) {
        ++s;
        continue;
      }
      Index t = s;
      while (t + 1 < n && in[t + 1]) ++t;
      const Index len = t - s + 1;
      Matrix y = Matrix::Zero(len, 2);
      if (s > 0) y(0, 0) = e(s - 1);
      if (t + 1 < n) y(len - 1, 1) = e(t);
      thomas_run(d, e, s, t, y, zero_tol);
      if (s > 0) sd(at[s - 1]) -= e(s - 1) * y(0, 0);
      if (t + 1 < n) sd(at[t + 1]) -= e(t) * y(len - 1, 1);
      if (s > 0 && t + 1 < n) se(at[s - 1]) -= e(s - 1) * y(0, 1);
      s = t + 1;
    }
    return SymMatrix::tridiagonal(std::move(sd), std::move(se));
  }

  const Eigen::LLT<Matrix> llt = checked_llt(m, sorted, tol);
  const Matrix m_ab = gather(m, sorted, rest);
  const Matrix s = gather(m, rest, rest) - m_ab.transpose() * llt.solve(m_ab);
  return SymMatrix::from_dense(s);
}

PptResult principal_pivot_transform(const SymMatrix& m, const Vector& r, const IndexSet& alpha,
                                    const Tolerances& tol) {
  const Index n = m.size();
  if (r.size() != n) throw Error(ErrorKind::InvalidArgument, "vector length does not match the matrix");
  PptResult out{r, m.dense()};
  if (alpha.empty()) return out;
  IndexSet sorted = alpha;
  std::sort(sorted.begin(), sorted.end());
  const IndexSet rest = complement(n, sorted);
  const Eigen::LLT<Matrix> llt = checked_llt(m.as_dense(), sorted, tol);
  const Index ka = static_cast<Index>(sorted.size());
  const Index kb = static_cast<Index>(rest.size());

  Vector r_a(ka);
  for (Index a = 0; a < ka; ++a) r_a(a) = r(sorted[a]);
  const Matrix inv = llt.solve(Matrix::Identity(ka, ka));
  const Matrix m_ab = gather(m, sorted, rest);
  const Matrix inv_m_ab = inv * m_ab;
  const Vector inv_r = inv * r_a;
  const Matrix schur = gather(m, rest, rest) - m_ab.transpose() * inv_m_ab;

  for (Index a = 0; a < ka; ++a) {
    out.transformed_vector(sorted[a]) = -inv_r(a);
    for (Index b = 0; b < ka; ++b) out.transformed_matrix(sorted[a], sorted[b]) = inv(a, b);
    for (Index b = 0; b < kb; ++b) {
      out.transformed_matrix(sorted[a], rest[b]) = -inv_m_ab(a, b);
      out.transformed_matrix(rest[b], sorted[a]) = inv_m_ab(a, b);
    }
  }
  for (Index b = 0; b < kb; ++b) {
    out.transformed_vector(rest[b]) = r(rest[b]) - m_ab.col(b).dot(inv_r);
    for (Index c = 0; c < kb; ++c) out.transformed_matrix(rest[b], rest[c]) = schur(b, c);
  }
  return out;
}

std::vector<IndexSet> irreducible_components(const SymMatrix& m) {
  const Index n = m.size();
  std::vector<IndexSet> comps;
  if (m.is_tridiagonal()) {
    const Vector& e = m.band_off();
    IndexSet cur;
    for (Index i = 0; i < n; ++i) {
      cur.push_back(i);
      if (i + 1 == n || e(i) == 0.0) {
        comps.push_back(std::move(cur));
        cur.clear();
      }
    }
    return comps;
  }
  const Matrix& a = m.dense_ref();
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  for (Index root = 0; root < n; ++root) {
    if (seen[root]) continue;
    IndexSet comp;
    std::queue<Index> frontier;
    frontier.push(root);
    seen[root] = 1;
    while (!frontier.empty()) {
      const Index i = frontier.front();
      frontier.pop();
      comp.push_back(i);
      for (Index j = 0; j < n; ++j) {
        if (!seen[j] && j != i && a(j, i) != 0.0) {
          seen[j] = 1;
          frontier.push(j);
        }
      }
    }
    std::sort(comp.begin(), comp.end());
    comps.push_back(std::move(comp));
  }
  return comps;
}

// ---------------------------------------------------------------------------
// FactorState

FactorState::FactorState(Index n) : buf_(n, n), pos_(static_cast<std::size_t>(n), -1) { alpha_.reserve(n); }

FactorState::FactorState(const SymMatrix& m, IndexSet alpha, const Tolerances& tol) : FactorState(m.size()) {
  alpha_ = std::move(alpha);
  for (Index a = 0; a < basis_size(); ++a) pos_[alpha_[a]] = a;
  refactor(m, tol);
  refactorizations_ = 0;
}

Vector FactorState::border_solve(const SymMatrix& m, Index i) const {
  const Index k = basis_size();
  Vector b(k);
  if (m.structure() == Structure::Dense) {
    const Matrix& a = m.dense_ref();
    for (Index r = 0; r < k; ++r) b(r) = a(alpha_[r], i);
  } else {
    for (Index r = 0; r < k; ++r) b(r) = m(alpha_[r], i);
  }
  return inverse() * b;
}

double FactorState::schur_scalar(const SymMatrix& m, Index i, const Vector& border) const {
  double s = m(i, i);
  for (Index r = 0; r < basis_size(); ++r) s -= m(i, alpha_[r]) * border(r);
  return s;
}

void FactorState::add(const SymMatrix& m, Index i, const Tolerances& tol) {
  if (contains(i)) throw Error(ErrorKind::InvalidArgument, "index already in the basis");
  const Index k = basis_size();
  const Vector h = border_solve(m, i);
  const double s = schur_scalar(m, i, h);
  flops_ += 4 * k * k + 4 * k;
  if (!(s > tol.pivot * m.scale())) {
    throw Error(ErrorKind::SingularPivot, "Schur scalar of the entering index is not positive");
  }
  auto top = buf_.topLeftCorner(k, k);
  top.noalias() += (h / s) * h.transpose();
  buf_.col(k).head(k) = -h / s;
  buf_.row(k).head(k) = -h.transpose() / s;
  buf_(k, k) = 1.0 / s;
  alpha_.push_back(i);
  pos_[i] = k;
  ++refresh_counter_;
  maybe_refresh(m, tol);
}

void FactorState::remove(const SymMatrix& m, Index i, const Tolerances& tol) {
  if (!contains(i)) throw Error(ErrorKind::InvalidArgument, "index not in the basis");
  const Index k = basis_size();
  const Index p = pos_[i];
  const Index last = k - 1;
  if (p != last) {
    buf_.row(p).head(k).swap(buf_.row(last).head(k));
    buf_.col(p).head(k).swap(buf_.col(last).head(k));
    std::swap(alpha_[p], alpha_[last]);
    pos_[alpha_[p]] = p;
  }
  const double c = buf_(last, last);
  const Vector b = buf_.col(last).head(last);
  buf_.topLeftCorner(last, last).noalias() -= (b / c) * b.transpose();
  alpha_.pop_back();
  pos_[i] = -1;
  flops_ += 2 * last * last;
  ++refresh_counter_;
  maybe_refresh(m, tol);
}

void FactorState::refactor(const SymMatrix& m, const Tolerances& tol) {
  const Index k = basis_size();
  if (k > 0) {
    const Eigen::LLT<Matrix> llt = checked_llt(m, alpha_, tol);
    buf_.topLeftCorner(k, k) = llt.solve(Matrix::Identity(k, k));
    flops_ += k * k * k;
  }
  refresh_counter_ = 0;
  ++refactorizations_;
}

double FactorState::probe_residual(const SymMatrix& m) const {
  const Index k = basis_size();
  if (k == 0) return 0.0;
  const Vector v = inverse() * Vector::Ones(k);
  double worst = 0.0;
  for (Index a = 0; a < k; ++a) {
    double s = 0.0;
    for (Index b = 0; b < k; ++b) s += m(alpha_[a], alpha_[b]) * v(b);
    worst = std::max(worst, std::abs(s - 1.0));
  }
  return worst;
}

void FactorState::maybe_refresh(const SymMatrix& m, const Tolerances& tol) {
  const bool stale = refresh_counter_ > m.size();
  if (stale || probe_residual(m) >= tol.factor) refactor(m, tol);
  flops_ += 4 * basis_size() * basis_size();
}

double FactorState::residual(const SymMatrix& m) const {
  const Index k = basis_size();
  if (k == 0) return 0.0;
  return inf_norm(Matrix(inverse()) * gather(m, alpha_, alpha_) - Matrix::Identity(k, k));
}

FactorState factor_update(const SymMatrix& m, FactorState f, Index i, Direction direction, const Tolerances& tol) {
  if (direction == Direction::Add) {
    f.add(m, i, tol);
  } else {
    f.remove(m, i, tol);
  }
  return f;
}

// ---------------------------------------------------------------------------
// Tridiagonal solves

std::int64_t tridiag_solve_masked(const SymMatrix& m, const std::vector<char>& in_alpha, const Matrix& rhs,
                                  Matrix& out, const Tolerances& tol) {
  const Vector& d = m.band_diag();
  const Vector& e = m.band_off();
  const Index n = m.size();
  const double zero_tol = tol.pivot * m.scale();
  std::int64_t flops = n;
  for (Index s = 0; s < n;) {
    if (!in_alpha[s]) {
      ++s;
      continue;
    }
    Index t = s;
    while (t + 1 < n && in_alpha[t + 1]) ++t;
    out.middleRows(s, t - s + 1) = rhs.middleRows(s, t - s + 1);
    flops += thomas_run(d, e, s, t, out.middleRows(s, t - s + 1), zero_tol);
    s = t + 1;
  }
  return flops;
}

Vector tridiag_solve(const SymMatrix& m, const IndexSet& alpha, const Vector& rhs, const Tolerances& tol) {
  if (!m.is_tridiagonal()) throw Error(ErrorKind::InvalidArgument, "tridiag_solve needs a tridiagonal matrix");
  if (!std::is_sorted(alpha.begin(), alpha.end())) throw Error(ErrorKind::InvalidArgument, "alpha must be sorted");
  std::vector<char> in(static_cast<std::size_t>(m.size()), 0);
  for (Index i : alpha) in[i] = 1;
  Matrix out = Matrix::Zero(m.size(), 1);
  tridiag_solve_masked(m, in, rhs, out, tol);
  Vector y(static_cast<Index>(alpha.size()));
  for (Index a = 0; a < y.size(); ++a) y(a) = out(alpha[a], 0);
  return y;
}

}  // namespace pppa
