#pragma once

#include <Eigen/Core>

#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace pppa {

using Index = Eigen::Index;
using IndexSet = std::vector<Index>;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// max |v_i|, 0 for an empty vector.
template <class Derived>
double inf_norm(const Eigen::MatrixBase<Derived>& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

enum class ErrorKind {
  SingularBlock,
  SingularPivot,
  NotApplicable,
  NegativeComponent,
  TooLarge,
  PreconditionViolated,
  IterationCap,
  ClassificationFailed,
  InvariantViolation,
  RecursionCapExceeded,
  GenerationFailed,
  InvalidArgument,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Tolerances shared by the numerical kernels. Relative tolerances are
/// multiplied by a matrix scale (max |m_ii|) at the point of use.
struct Tolerances {
  double pivot = 1e-10;     // nonsingularity threshold for Cholesky/Schur pivots
  double psd = 1e-9;        // slack for positive semidefiniteness tests
  double factor = 1e-8;     // residual bound for the maintained inverse
  double ratio = 1e-12;     // candidate threshold in ratio tests, relative to the vector norm
  double kernel = 1e-8;     // pinned-solve residual deciding a nontrivial kernel
  double positive = 1e-12;  // strict positivity of the dominance vector
  double cert = 1e-8;       // certificate inequalities of the bound-fixed subproblems
  double kkt = 1e-8;        // acceptance bound on the KKT residual, relative to 1 + |q|_inf
};

}  // namespace pppa
