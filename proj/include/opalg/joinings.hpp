#pragma once

#include <string>

#include "opalg/dynamics.hpp"

namespace opalg {

using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

// phi(x (x) y) = value
struct AffineCondition {
  Element x;
  Element y;
  cd value;
};

// States on M (x) N^op, with N^op realized by transposes: phi(x (x) y) = sum_b Tr(rho_b (x_i (x) y_j^T)).
// rho is parameterized by real coordinates that are orthonormal for Re Tr(A B).
class JoiningProblem {
 public:
  JoiningProblem(DynamicalSystem M, DynamicalSystem N, Identification id);

  const DynamicalSystem& M() const { return M_; }
  const DynamicalSystem& N() const { return N_; }
  const Identification& identification() const { return id_; }
  const std::vector<int>& block_sizes() const { return sizes_; }
  int num_params() const { return nparams_; }

  std::vector<Mat> ambient(const Element& x, const Element& y) const;
  // phi(x (x) y) = coefficients . params
  Eigen::VectorXcd coefficients(const Element& x, const Element& y) const;
  std::vector<Mat> density(const RVec& r) const;
  RVec params(const std::vector<Mat>& rho) const;

  // base affine system (marginals, diagonal on Q, invariance); A r = b
  const RMat& A() const { return A_; }
  const RVec& b() const { return b_; }
  void append_rows(const AffineCondition& c, std::vector<Eigen::RowVectorXd>& rows, std::vector<double>& rhs) const;

  // tau_M(E_Q(x) iota^{-1}(E_Q(y)))
  cd rel_indep_value(const Element& x, const Element& y) const;

 private:
  DynamicalSystem M_, N_;
  Identification id_;
  std::vector<int> sizes_;    // m_i n_j, block index i * nbN + j
  std::vector<int> poffset_;  // first parameter of each block
  int nparams_ = 0;
  RMat A_;
  RVec b_;
};

JoiningProblem self_joining_problem(const DynamicalSystem& S);

struct JoiningState {
  RVec params;
  std::vector<Mat> rho;
  double min_eigenvalue = 0;
  double constraint_residual = 0;
};

JoiningState make_state(const JoiningProblem& J, const RVec& r);
cd evaluate(const JoiningProblem& J, const JoiningState& s, const Element& x, const Element& y);

JoiningState rel_indep_joining(const JoiningProblem& J);

struct FeasibilityResult {
  bool feasible = false;
  JoiningState state;
  int iterations = 0;
  std::vector<double> residual_history;
  std::string reason;
};

FeasibilityResult joining_feasible(const JoiningProblem& J, const std::vector<AffineCondition>& extra = {},
                                   int max_iter = 100000);

using TestObservable = std::vector<std::pair<Element, Element>>;

struct ProbeResult {
  double max_value = 0;
  double rel_indep_value = 0;
  bool non_disjoint = false;
  JoiningState optimizer;
  int free_dims = 0;
  int newton_steps = 0;
};

ProbeResult disjointness_probe(const JoiningProblem& J, const TestObservable& T);

struct CPMap {
  Mat l2;  // d_N x d_M in orthonormal coordinates
  double unital_residual = 0;
  double q_residual = 0;
  double choi_min = 0;
  double intertwining_residual = 0;
  Element apply(const Algebra& M, const Algebra& N, const Element& x) const { return N.from_l2(l2 * M.to_l2(x)); }
};

CPMap cp_from_joining(const JoiningProblem& J, const JoiningState& s);

// Gram of simple tensors under a state against the fusion Gram
struct GNSComparison {
  int gram_rank = 0;
  int fusion_dim = 0;
  double max_inner_residual = 0;
};

GNSComparison compare_gns_with_fusion(const JoiningProblem& J, const JoiningState& s);

struct RelativeProduct {
  FusionSpace F;
  StarDecomposition dec;
  Mat l2_to_fusion;  // unitary L^2(P) -> fusion space
  Subalgebra Q_in_P;
  double trace_residual = 0;
  double hom_residual = 0;
  double agree_residual = 0;

  const Algebra& algebra() const { return dec.algebra; }
  Element iota1(const Element& x) const { return dec.to_algebra(F.left_action(x)); }
  // a homomorphism on N2^op
  Element iota2(const Element& y) const { return dec.to_algebra(F.right_action(y)); }
};

RelativeProduct rel_product_central(const Subalgebra& Q1, const Subalgebra& Q2, const Identification& id);
DynamicalSystem product_system(const DynamicalSystem& S1, const DynamicalSystem& S2, const RelativeProduct& P);

struct TheoremBReport {
  int dim1 = 0, dim2 = 0, dimP = 0;
  int ap1 = 0, ap2 = 0, apP = 0;
  int tensor_rank = 0;          // rank of ap1 (x)_Q ap2 inside L^2(P)
  double subspace_residual = 0;  // ap(P) vs ap1 (x)_Q ap2
  int witness_pairs = 0;
  int witness_rank = 0;
  double witness_residual = 0;  // invariance, right-Q, containment
  bool passed = false;
};

TheoremBReport theoremB_check(const DynamicalSystem& S1, const DynamicalSystem& S2, const Identification& id);

}  // namespace opalg
