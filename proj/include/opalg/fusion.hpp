#pragma once

#include <map>

#include "opalg/linalg.hpp"
#include "opalg/modules.hpp"

namespace opalg {

// iota: Q1 -> Q2 given by the images of Q1's orthonormal basis, in L^2(N2) coordinates.
struct Identification {
  Mat image;  // d2 x dim Q1
};

Identification identity_identification(const Subalgebra& Q);
// Throws IdentificationError unless iota is a trace-preserving *-isomorphism onto Q2.
void verify_identification(const Subalgebra& Q1, const Subalgebra& Q2, const Identification& id);

using FusionVector = Vec;

class FusionSpace {
 public:
  FusionSpace(Subalgebra Q1, Subalgebra Q2, Identification id, bool parallel = true);

  const Algebra& left() const { return Q1_.parent(); }
  const Algebra& right() const { return Q2_.parent(); }
  const Subalgebra& Q() const { return Q1_; }
  const Subalgebra& Q_right() const { return Q2_; }
  const Identification& identification() const { return id_; }
  const Mat& gram() const { return gram_; }
  const GramFrame& frame() const { return frame_; }
  int dim() const { return frame_.dim; }
  int coeff_dim() const { return static_cast<int>(gram_.rows()); }

  // class of a coefficient vector over a_i (x) b_j, index i*d2 + j
  FusionVector from_coeffs(const Vec& c) const { return frame_.coord * c; }
  Vec coeffs(const Element& x, const Element& y) const;
  // descend an operator on the coefficient space
  Mat descend(const Mat& A, const char* what) const;

  Mat left_action(const Element& x) const;
  Mat right_action(const Element& y) const;
  // f -> embed(f, 1), an r x d1 isometry-up-to-E_Q
  const Mat& iota1() const { return iota1_; }
  // class of f (x) 1 for every basis vector of L^2(Q1), as columns
  Mat q_image() const;

 private:
  Subalgebra Q1_, Q2_;
  Identification id_;
  Mat gram_;
  GramFrame frame_;
  Mat iota1_;
};

FusionSpace build_fusion(const Subalgebra& Q1, const Subalgebra& Q2, const Identification& id,
                         bool parallel = true);
// L^2(N) (x)_Q L^2(N)
FusionSpace build_fusion(const Subalgebra& Q, bool parallel = true);

FusionVector embed(const FusionSpace& F, const Element& x, const Element& y);
cd fusion_inner(const FusionVector& v, const FusionVector& w);

enum class Side { Left, Right };
FusionVector module_actions(const FusionSpace& F, Side side, const Element& x, const FusionVector& v);

Element corner_project(const FusionSpace& F, const FusionVector& v);
Element cond_convolve(const FusionSpace& F, const FusionVector& K, const Element& f);
// T_K on L^2(N) in orthonormal coordinates
Mat convolution_operator(const FusionSpace& F, const FusionVector& K);
// K^dagger with T_{K^dagger} = T_K^*  (same algebra on both sides)
FusionVector flip_adjoint(const FusionSpace& F, const FusionVector& K);
// inverse of K -> T_K on its image; residual checked
FusionVector fusion_vector_for_operator(const FusionSpace& F, const Mat& T);

struct CHSTruncation {
  Mat projection;      // p_eps on L^2(N)
  QModule range;       // with Pimsner-Popa basis
  Mat T;               // symmetrized T_K
  double tail_norm = 0;  // ||T_K (1 - p_eps)||
};

CHSTruncation chs_truncate(const FusionSpace& F, const FusionVector& K, double eps);

struct FiberProduct {
  std::vector<std::pair<int, int>> atoms;
  std::vector<double> masses;
  int fusion_dim = 0;
  double max_inner_residual = 0;
  bool dims_match = false;
};

// points are 0..n-1 with the given masses; partition[x] labels the fiber of x
FiberProduct commutative_fiber_oracle(const std::vector<double>& masses,
                                      const std::vector<int>& partition,
                                      const ToleranceProfile& tol = {});
Subalgebra partition_subalgebra(const Algebra& A, const std::vector<int>& partition);

}  // namespace opalg
