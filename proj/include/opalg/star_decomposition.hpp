#pragma once

#include "opalg/algebra.hpp"

namespace opalg {

// A unital *-subalgebra of M_D realized as a multi-matrix Algebra.
// Trace weights come from a vector state, which must be tracial on the subalgebra.
struct StarDecomposition {
  Algebra algebra;
  int D = 0;
  std::vector<int> multiplicity;
  // units[b][j * n + k] = E^{(b)}_{jk} as a D x D operator
  std::vector<std::vector<Mat>> units;

  Element to_algebra(const Mat& op) const;
  Mat to_operator(const Element& x) const;
};

// basis: operators spanning the *-algebra (need not be orthonormal); omega: unit vector.
StarDecomposition decompose_star_algebra(const std::vector<Mat>& basis, const Vec& omega,
                                         const ToleranceProfile& tol);

}  // namespace opalg
