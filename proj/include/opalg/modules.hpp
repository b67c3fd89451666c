#pragma once

#include <utility>

#include "opalg/subalgebra.hpp"

namespace opalg {

struct QModule {
  Subalgebra Q;
  Mat basis;                        // orthonormal L^2 columns
  std::vector<Element> pp_basis;    // <xi_i, xi_j>_Q = delta_ij p_i
  std::vector<Element> projections;  // p_i

  int rank() const { return static_cast<int>(basis.cols()); }
  // sum_i xi_i <xi_i, v>_Q
  Element expand(const Element& v) const;
};

// (eta, p) with <eta, eta>_Q = p
std::pair<Element, Element> normalize_conditional(const Subalgebra& Q, const Element& xi, double eps);

QModule pimsner_popa_basis(const Subalgebra& Q, const Mat& V);

// Smallest subspace containing S, right-Q-invariant and invariant under the given maps.
QModule module_from_generators(const Subalgebra& Q, const std::vector<Element>& S,
                               const std::vector<Mat>& koopman = {});

}  // namespace opalg
