#pragma once

#include <optional>
#include <string>

#include "opalg/fusion.hpp"
#include "opalg/star_decomposition.hpp"

namespace opalg {

enum class GroupKind { FiniteAbelian, FreeAbelian, Presented };

// a group element as a word in signed generator indices (+(g+1) / -(g+1))
struct GroupWord {
  std::vector<int> letters;
};

struct GroupSpec {
  GroupKind kind = GroupKind::FiniteAbelian;
  std::vector<int> orders;          // finite_abelian
  int rank = 0;                     // free_abelian
  std::vector<std::string> labels;  // one per generator
  // presented: each relation is a word of tokens "a" or "a^-1"
  std::vector<std::vector<std::string>> relations;

  int num_generators() const;
  bool is_abelian() const { return kind != GroupKind::Presented; }
  bool is_finite() const { return kind == GroupKind::FiniteAbelian; }
  void validate() const;
  std::string word_label(const GroupWord& w) const;
  GroupWord parse_word(const std::vector<std::string>& tokens) const;
};

GroupSpec finite_abelian(std::vector<int> orders);
GroupSpec free_abelian(int rank);

class DynamicalSystem {
 public:
  DynamicalSystem() = default;

  const Algebra& algebra() const { return A_; }
  const GroupSpec& group() const { return group_; }
  const Subalgebra& Q() const { return Q_; }
  // Koopman unitaries on L^2(N), one per generator
  const std::vector<Mat>& koopman() const { return koopman_; }
  bool ergodic() const { return ergodic_; }
  int dim() const { return A_.dim(); }

  Mat koopman_of(const GroupWord& w) const;
  Element apply(const GroupWord& w, const Element& x) const;
  // all elements of a finite group; words up to length wordlen otherwise (deduplicated)
  std::vector<GroupWord> enumerate(int wordlen) const;

  friend DynamicalSystem make_system(const Algebra&, const GroupSpec&, const std::vector<Mat>&,
                                     const Subalgebra&);

 private:
  Algebra A_;
  GroupSpec group_;
  std::vector<Mat> koopman_;
  Subalgebra Q_;
  bool ergodic_ = false;
};

// gen_maps are matrices on L^2(N) in orthonormal coordinates
DynamicalSystem make_system(const Algebra& A, const GroupSpec& group, const std::vector<Mat>& gen_maps,
                            const Subalgebra& Q);
DynamicalSystem with_subalgebra(const DynamicalSystem& S, const Subalgebra& Q);

// Koopman matrix of Ad(u); u is not checked here
Mat inner_automorphism(const Algebra& A, const Element& u);
// sigma(delta_i) = delta_{perm[i]} on a commutative algebra
Mat permutation_automorphism(const Algebra& A, const std::vector<int>& perm);

Mat invariant_subspace(const std::vector<Mat>& ops, int n, const ToleranceProfile& tol);
Mat invariant_subspace(const DynamicalSystem& S);
Subalgebra fixed_algebra(const DynamicalSystem& S);

// diagonal action on the fusion space, one unitary per generator
std::vector<Mat> diagonal_action(const DynamicalSystem& S, const FusionSpace& F);
std::vector<Mat> diagonal_action(const std::vector<Mat>& U1, const std::vector<Mat>& U2, const FusionSpace& F);

struct APDecomposition {
  Mat ap_basis;
  Mat wm_basis;
  Mat witnesses;  // invariant fusion vectors, columns
  FusionSpace F;
};

APDecomposition ap_decompose(const DynamicalSystem& S);
// AP part as a subalgebra (always one at finite dimension)
Subalgebra ap_subalgebra(const DynamicalSystem& S, const APDecomposition& ap);

struct CompactnessReport {
  bool compact = false;
  int ap_rank = 0;
  int wm_rank = 0;
  std::vector<QModule> modules;   // invariant finitely generated modules
  std::vector<double> module_dimQ;
  int module_rank_sum = 0;
  double total_dimQ = 0;          // dim_Q L^2(N)
  double dimQ_residual = 0;       // |sum module dims - total|
  double max_invariance_residual = 0;
};

CompactnessReport is_compact_extension(const DynamicalSystem& S);
CompactnessReport is_compact_extension(const DynamicalSystem& S, const APDecomposition& ap);

struct WeakMixingResult {
  bool weakly_mixing = false;
  double max_residual = 0;
  FusionVector witness;  // invariant vector outside the image of L^2(Q), unit norm
};

WeakMixingResult test_weak_mixing(const DynamicalSystem& S);

struct PopaProbeResult {
  double value = 0;
  GroupWord word;
  std::vector<double> values;  // one per enumerated word
  std::vector<GroupWord> words;
};

PopaProbeResult popa_probe(const DynamicalSystem& S, const std::vector<Element>& F, int wordlen);

struct TruncationResult {
  QModule module;
  double tau_gap = 0;
  double tau_V = 0;
  double tau_V1 = 0;
};

// V: orthonormal columns of a Gamma-invariant right-Q-invariant subspace
TruncationResult invariant_module_truncate(const DynamicalSystem& S, const Mat& V, double eps);

// max over gamma of || U_gamma xi - sum_i eta_i kappa_i(gamma) ||, with eta a PP basis of M
double capture_residual(const DynamicalSystem& S, const QModule& M, const Vec& xi,
                        const std::vector<GroupWord>& words);

// Restriction of S to an invariant subalgebra Z, realized as its own multi-matrix algebra.
struct Restriction {
  DynamicalSystem system;
  StarDecomposition dec;
  Mat to_parent;  // L^2(Z') -> L^2(N), isometry
};

Restriction restrict_system(const DynamicalSystem& S, const Subalgebra& Z, const Subalgebra& Qsub);

}  // namespace opalg
