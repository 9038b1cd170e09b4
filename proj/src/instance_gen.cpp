#include "pppa/instance_gen.hpp"

#include "pppa/classify.hpp"
#include "pppa/matrix_core.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace pppa {

const char* to_string(Family f) {
  switch (f) {
    case Family::SbarRandom: return "sbar_random";
    case Family::Tridiagonal: return "tridiagonal";
    case Family::SbarNk: return "sbar_nk";
  }
  return "unknown";
}

Family parse_family(const std::string& name) {
  if (name == "sbar_random") return Family::SbarRandom;
  if (name == "tridiagonal") return Family::Tridiagonal;
  if (name == "sbar_nk") return Family::SbarNk;
  throw Error(ErrorKind::InvalidArgument, "unknown family '" + name + "'");
}

SymMatrix assemble_sbar(const Matrix& r, const Matrix& pattern) {
  const Index n = r.rows();
  SymMatrix m(n);
  Vector dominance = Vector::Zero(n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < i; ++j) {
      const double v = r(i, j) * pattern(i, j);
      m.set(i, j, v);
      dominance(i) += std::abs(v);
      dominance(j) += std::abs(v);
    }
  }
  for (Index i = 0; i < n; ++i) m.set(i, i, std::abs(r(i, i)) + dominance(i));
  return m;
}

SymMatrix assemble_tridiagonal(const Vector& off, const Vector& r_diag) {
  const Index n = r_diag.size();
  Vector d = r_diag.cwiseAbs();
  for (Index i = 0; i + 1 < n; ++i) {
    d(i) += std::abs(off(i));
    d(i + 1) += std::abs(off(i));
  }
  return SymMatrix::tridiagonal(std::move(d), off);
}

namespace {

void check_spec(const GenSpec& spec) {
  if (spec.n < 1) throw Error(ErrorKind::InvalidArgument, "n must be at least 1");
  if (!(spec.rho > 0.0 && spec.rho < 1.0)) throw Error(ErrorKind::InvalidArgument, "rho must lie in (0, 1)");
}

QpInstance sbar_from_stream(Index n, double rho, UniformStream& rng) {
  Matrix r = Matrix::Zero(n, n);
  Matrix pattern = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j <= i; ++j) r(i, j) = rng.uniform(-0.5, 0.5);
  }
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < i; ++j) pattern(i, j) = rng.next() < rho ? 1.0 : 0.0;
  }
  QpInstance inst;
  inst.m = assemble_sbar(r, pattern);
  inst.q.resize(n);
  for (Index i = 0; i < n; ++i) inst.q(i) = rng.uniform(-500.0, 500.0);
  inst.u = Vector::Constant(n, 100.0 / std::sqrt(static_cast<double>(n)));
  return inst;
}

double comparison_lambda_min(const Matrix& m) {
  Matrix c = m;
  for (Index j = 0; j < c.cols(); ++j) {
    for (Index i = 0; i < c.rows(); ++i) {
      if (i != j) c(i, j) = -std::abs(c(i, j));
    }
  }
  return Eigen::SelfAdjointEigenSolver<Matrix>(c, Eigen::EigenvaluesOnly).eigenvalues()(0);
}

}  // namespace

QpInstance gen_sbar_random(const GenSpec& spec) {
  check_spec(spec);
  UniformStream rng(spec.seed);
  return sbar_from_stream(spec.n, spec.rho, rng);
}

QpInstance gen_tridiagonal(const GenSpec& spec) {
  if (spec.n < 1) throw Error(ErrorKind::InvalidArgument, "n must be at least 1");
  const Index n = spec.n;
  UniformStream rng(spec.seed);
  Vector off(std::max<Index>(n - 1, 0));
  Vector rd(n);
  for (Index i = 0; i < n; ++i) {
    if (i > 0) {
      double v = 0.0;
      while (v == 0.0) v = rng.uniform(-0.5, 0.5);
      off(i - 1) = v;
    }
    rd(i) = rng.uniform(-0.5, 0.5);
  }
  QpInstance inst;
  inst.m = assemble_tridiagonal(off, rd);
  inst.q.resize(n);
  for (Index i = 0; i < n; ++i) inst.q(i) = rng.uniform(-500.0, 500.0);
  inst.u = Vector::Constant(n, 100.0 / std::sqrt(static_cast<double>(n)));
  return inst;
}

QpInstance gen_sbar_nk(const GenSpec& spec) {
  check_spec(spec);
  if (spec.k == 0) return gen_sbar_random(spec);
  if (spec.k < 0) throw Error(ErrorKind::InvalidArgument, "k must be nonnegative");
  if (spec.n > 12) throw Error(ErrorKind::InvalidArgument, "planted instances are limited to n <= 12");
  const Index n = spec.n;
  UniformStream rng(spec.seed);
  QpInstance inst = sbar_from_stream(n, spec.rho, rng);
  const Matrix base = inst.m.dense();
  const double scale = inst.m.scale();

  for (int attempt = 0; attempt < 100; ++attempt) {
    Vector v(n);
    for (Index i = 0; i < n; ++i) v(i) = rng.uniform(-1.0, 1.0);
    if (!(v.maxCoeff() > 0.0 && v.minCoeff() < 0.0)) continue;
    const Matrix vv = v * v.transpose();
    auto lambda = [&](double eps) { return comparison_lambda_min(base + eps * vv); };

    double lo = 0.0;
    double hi = 1e-3 * scale / v.squaredNorm();
    int grow = 0;
    while (lambda(hi) >= 0.0 && grow < 60) {
      lo = hi;
      hi *= 2.0;
      ++grow;
    }
    if (grow == 60) continue;
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (lambda(mid) >= 0.0) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    for (int j = 1; j <= 8; ++j) {
      const double eps = hi * (1.0 + std::pow(10.0, -j));
      SymMatrix m = SymMatrix::from_dense(base + eps * vv);
      if (is_psd(m) && !is_in_sbar_plus(m) && is_sbar_nk(m, spec.k)) {
        inst.m = std::move(m);
        return inst;
      }
    }
  }
  throw Error(ErrorKind::GenerationFailed, "no planted instance accepted after 100 attempts");
}

QpInstance generate(const GenSpec& spec) {
  switch (spec.family) {
    case Family::SbarRandom: return gen_sbar_random(spec);
    case Family::Tridiagonal: return gen_tridiagonal(spec);
    case Family::SbarNk: return gen_sbar_nk(spec);
  }
  throw Error(ErrorKind::InvalidArgument, "unknown family");
}

}  // namespace pppa
