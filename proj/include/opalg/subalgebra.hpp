#pragma once

#include "opalg/algebra.hpp"

namespace opalg {

class Subalgebra {
 public:
  Subalgebra() = default;
  // basis_l2: columns are orthonormal L^2 coordinates; verified to span a unital *-subalgebra
  Subalgebra(Algebra parent, Mat basis_l2);

  const Algebra& parent() const { return parent_; }
  const Mat& basis_l2() const { return basis_; }
  std::vector<Element> basis() const { return elements_from_columns(parent_, basis_); }
  int dim() const { return static_cast<int>(basis_.cols()); }
  bool contains_unit() const { return true; }
  // e_Q as an operator on L^2(N)
  Mat projector() const { return basis_ * basis_.adjoint(); }
  bool contains(const Element& x, double tol) const;

 private:
  Algebra parent_;
  Mat basis_;
};

Subalgebra generate_subalgebra(const Algebra& A, const std::vector<Element>& generators);
Subalgebra scalar_subalgebra(const Algebra& A);
Subalgebra full_subalgebra(const Algebra& A);
// Verifies a spanning set is a unital *-algebra; throws NotAnAlgebra otherwise.
Subalgebra subalgebra_from_span(const Algebra& A, const Mat& span_l2);

Element cond_expect(const Subalgebra& Q, const Element& x);
Element q_inner(const Subalgebra& Q, const Element& x, const Element& y);

struct BasicConstruction {
  int ambient_dim = 0;
  // orthonormal (Frobenius) basis of span{L_x e_Q L_y}, each vectorized column-major
  Mat algebra_basis;
  Mat e_Q;
  // tau_hat(T) = functional . (algebra_basis^* vec(T)) for T in the span
  Vec functional;

  std::vector<Mat> basis_operators() const;
  double span_residual(const Mat& T) const;
  cd tau_hat(const Mat& T) const;
};

BasicConstruction basic_construction(const Subalgebra& Q);

// V: orthonormal columns spanning a right-Q-invariant subspace of L^2(N).
double right_invariance_residual(const Subalgebra& Q, const Mat& V);
double dimQ(const Subalgebra& Q, const Mat& V);
double dimQ(const Subalgebra& Q, const BasicConstruction& bc, const Mat& V);

}  // namespace opalg
