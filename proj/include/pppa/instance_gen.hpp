#pragma once

#include "pppa/qp.hpp"

#include <cstdint>
#include <random>
#include <string>

namespace pppa {

enum class Family { SbarRandom, Tridiagonal, SbarNk };

const char* to_string(Family f);
/// Accepts sbar_random, tridiagonal and sbar_nk; throws InvalidArgument otherwise.
Family parse_family(const std::string& name);

struct GenSpec {
  Index n = 1;
  double rho = 0.5;
  std::uint64_t seed = 0;
  Family family = Family::SbarRandom;
  int k = 1;  // only for SbarNk
};

inline constexpr const char* kGeneratorId = "mt19937_64/u53";

/// Uniform draws on [0,1) from the top 53 bits of mt19937_64.
class UniformStream {
 public:
  explicit UniformStream(std::uint64_t seed) : engine_(seed) {}
  double next() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * next(); }

 private:
  std::mt19937_64 engine_;
};

/// M_ij = R_ij P_ij off the diagonal and M_ii = |R_ii| + sum_{j != i} |M_ij|.
/// `r` and `pattern` are read on and below the diagonal only.
SymMatrix assemble_sbar(const Matrix& r, const Matrix& pattern);

/// Band off(i) couples i and i+1; M_ii = |r_ii| + |off(i-1)| + |off(i)|.
SymMatrix assemble_tridiagonal(const Vector& off, const Vector& r_diag);

/// R_ij ~ U(-0.5, 0.5) on the lower triangle (row-major, diagonal included),
/// then P_ij ~ Bernoulli(rho) on the strict lower triangle, then
/// q_i ~ U(-500, 500); u_i = 100 / sqrt(n).
QpInstance gen_sbar_random(const GenSpec& spec);

/// Per row: the coupling to the previous index (redrawn while zero), then the
/// diagonal draw; then q. Tridiagonal storage, bounds as above.
QpInstance gen_tridiagonal(const GenSpec& spec);

/// gen_sbar_random plus eps v v' with a mixed-sign v, eps placed just past
/// the point where the comparison matrix stops being psd. n <= 12. Throws
/// GenerationFailed after 100 rejected attempts.
QpInstance gen_sbar_nk(const GenSpec& spec);

QpInstance generate(const GenSpec& spec);

}  // namespace pppa
