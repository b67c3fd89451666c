#pragma once

#include <string>

#include "opalg/dynamics.hpp"

namespace opalg {

// Vertices of {0,1}^k are bitmasks; bit j-1 holds eps_j.
int cube_weight(int eps);

// eps_j = eta_j for j in J (1-based)
struct Face {
  std::vector<int> J;
  std::vector<int> eta;
  void validate(int k) const;
  bool contains(int eps) const;
};
Face full_face();
Face side(int j, int eta);

struct CubicLevel {
  int k = 0;
  int dim = 0;
  Vec omega;
  // gen_ops[eps][i]: pi_k(u_i placed at eps), u_i the orthonormal basis of L^2(N)
  std::vector<std::vector<Mat>> gen_ops;
  // elementary tensors (basis indices per vertex) whose classes form a basis
  std::vector<std::vector<int>> spanning;
  Mat spanning_vectors;
  Mat spanning_inverse;
  Mat P_inv;  // orthonormal basis of diagonal-invariant vectors
  std::vector<Mat> diagonal_unitaries;  // full face, one per generator
  std::vector<Mat> side_unitaries;      // ordered by side j, then eta, then generator
  std::vector<std::string> side_labels;
  double side_unitarity_residual = 0;
  double side_state_residual = 0;  // max ||U Omega - Omega||
  double traciality_residual = 0;
  double definition_residual = 0;  // well-definedness of the lifted operators

  int vertices() const { return 1 << k; }
  Mat op_at(int eps, const Vec& x_l2) const;
  // pi_k of an elementary tensor, xs[eps] in L^2 coordinates
  Mat op_of(const std::vector<Vec>& xs) const;
};

long default_budget();

CubicLevel build_level0(const DynamicalSystem& S);
CubicLevel lift_level(const CubicLevel& L, const DynamicalSystem& S, long budget, bool parallel = true);

Mat face_transformation(const CubicLevel& L, const DynamicalSystem& S, const GroupWord& w, const Face& face);

struct InvariantCubes {
  Mat I_basis;
  Mat J_basis;
  double zerocoord_residual = 0;
};
InvariantCubes invariant_cubes(const CubicLevel& L, const DynamicalSystem& S);

class CubicTower {
 public:
  explicit CubicTower(DynamicalSystem S, long budget = default_budget(), bool parallel = true);

  const DynamicalSystem& system() const { return S_; }
  int built() const { return static_cast<int>(levels_.size()); }
  const CubicLevel& level(int k);
  long budget() const { return budget_; }

  // tau^[k] on an elementary tensor, evaluated from level k-1 (level 0 when k = 0)
  cd state_eval(int k, const std::vector<Element>& xs);
  // same value from level k itself
  cd state_eval_direct(int k, const std::vector<Element>& xs);
  double seminorm(const Element& x, int k);
  double seminorm_direct(const Element& x, int k);
  // left kernel of B(x, y) = tau^[k](x (x) y), and its complement L^2(Z_{k-1})
  Mat left_kernel(int k);
  Mat z_subspace(int k);

 private:
  DynamicalSystem S_;
  long budget_;
  bool parallel_;
  std::vector<CubicLevel> levels_;
};

Subalgebra z_algebra(CubicTower& T, int k);

struct TowerLevelInfo {
  int k = 0;
  int frame_dim = 0;
  int I_dim = 0;
  int J_dim = 0;
  double zerocoord_residual = 0;
  double side_unitarity_residual = 0;
  double side_state_residual = 0;
  double traciality_residual = 0;
};

struct ZInfo {
  int k = 0;  // Z_{k-1} computed at level k - 1
  Mat basis;
  int dim = 0;
  bool is_algebra = false;
  double invariance_residual = 0;
  double normchar_kernel_max = 0;   // largest |||x|||_k^(2^k) on the left kernel
  double normchar_complement_min = 0;  // smallest seminorm on unit vectors of Z
  bool compact_over_previous = true;
};

struct TowerReport {
  int kmax = 0;
  std::vector<TowerLevelInfo> levels;
  std::vector<ZInfo> z;
  bool increasing = true;
  int ap_rank_over_C = -1;  // maximal compact subsystem, for comparison with Z_1
  std::vector<std::vector<double>> seminorms;  // [probe][k-1]
};

TowerReport tower_report(const DynamicalSystem& S, int kmax, const std::vector<Element>& probes,
                         long budget = default_budget());

}  // namespace opalg
