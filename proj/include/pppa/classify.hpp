#pragma once

#include "pppa/sym_matrix.hpp"
#include "pppa/types.hpp"

#include <optional>
#include <vector>

namespace pppa {

bool is_z_matrix(const SymMatrix& m);

/// Comparison matrix is positive semidefinite.
bool is_in_sbar_plus(const SymMatrix& m, double tol = 1e-9);

/// Positive d with Mbar d >= 0 for an irreducible symmetric psd Z-matrix.
/// The last component of d is pinned to 1 when Mbar is singular; otherwise
/// d = Mbar^{-1} 1. Throws NotApplicable when Mbar is not such a matrix.
Vector find_dominance_vector(const SymMatrix& mbar, const Tolerances& tol = {});

/// Runs find_dominance_vector on each irreducible block of comparison_matrix(m)
/// and assembles the result.
Vector dominance_vector(const SymMatrix& m, const Tolerances& tol = {});

/// p = (M + Mbar) d / 2. Components in [-tol, 0) and positive roundoff are set to zero; anything
/// more negative throws NegativeComponent.
Vector build_parametric_vector(const SymMatrix& m, const Vector& d, const Tolerances& tol = {});

/// M psd and every principal submatrix of order n-k has a psd comparison
/// matrix. Throws TooLarge when C(n,k) exceeds 1e6.
bool is_sbar_nk(const SymMatrix& m, int k, double tol = 1e-9);

struct ClassReport {
  bool is_symmetric = true;
  bool is_z = false;
  bool is_psd = false;
  bool is_pd = false;
  bool is_sbar_plus = false;
  bool is_irreducible = false;
  std::vector<IndexSet> blocks;
  std::optional<int> k_level;  // empty when unknown
  std::optional<Vector> d;
  std::optional<Vector> p;
};

/// Runs every membership test. k_level is searched up to `max_k`.
ClassReport classify(const SymMatrix& m, int max_k = 2, const Tolerances& tol = {});

}  // namespace pppa
