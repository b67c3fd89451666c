#pragma once

#include <complex>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "opalg/error.hpp"

namespace opalg {

using cd = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

struct ToleranceProfile {
  double rank_rel = 1e-9;
  double rank_abs = 1e-12;
  double verify = 1e-10;
  double report = 1e-7;

  void validate() const;
};

// Dense per-block matrices.  Shape checking happens against an Algebra.
class Element {
 public:
  Element() = default;
  explicit Element(std::vector<Mat> blocks) : blocks_(std::move(blocks)) {}

  const std::vector<Mat>& blocks() const { return blocks_; }
  std::vector<Mat>& blocks() { return blocks_; }
  const Mat& block(std::size_t i) const { return blocks_[i]; }
  Mat& block(std::size_t i) { return blocks_[i]; }
  std::size_t num_blocks() const { return blocks_.size(); }

  Element adjoint() const;
  Element transpose() const;
  double max_abs() const;

  Element& operator+=(const Element& o);
  Element& operator-=(const Element& o);
  Element& operator*=(cd s);

 private:
  std::vector<Mat> blocks_;
};

Element operator+(Element a, const Element& b);
Element operator-(Element a, const Element& b);
Element operator*(const Element& a, const Element& b);
Element operator*(cd s, Element a);
Element operator*(Element a, cd s);

class Algebra {
 public:
  Algebra() = default;
  Algebra(std::vector<int> blocks, std::vector<double> weights, ToleranceProfile tol = {});

  const std::vector<int>& blocks() const { return blocks_; }
  const std::vector<double>& weights() const { return weights_; }
  const ToleranceProfile& tol() const { return tol_; }
  int num_blocks() const { return static_cast<int>(blocks_.size()); }
  // dim L^2(N) = sum n_i^2
  int dim() const { return dim_; }
  int offset(int b) const { return offsets_[b]; }
  bool is_commutative() const;

  Element zero() const;
  Element identity() const;
  // unnormalized matrix unit e_ij in block b
  Element matrix_unit(int b, int i, int j) const;
  // k-th vector of the orthonormal L^2 basis (scaled matrix units)
  Element basis(int k) const;
  // (block, row, col) of coordinate k
  void coordinate(int k, int& b, int& i, int& j) const;

  void check(const Element& x) const;
  Vec to_l2(const Element& x) const;
  Element from_l2(const Vec& v) const;

  // operators on L^2(N) in the orthonormal coordinates
  Mat left_mult(const Element& x) const;
  Mat right_mult(const Element& y) const;
  // vec(x*) = conj(vec(x)) permuted by this
  const std::vector<int>& star_perm() const { return star_perm_; }
  Vec star_l2(const Vec& v) const;

  bool same_shape(const Algebra& o) const;

 private:
  std::vector<int> blocks_;
  std::vector<double> weights_;
  ToleranceProfile tol_;
  std::vector<int> offsets_;
  std::vector<double> scale_;  // sqrt(alpha_i / n_i)
  std::vector<int> star_perm_;
  int dim_ = 0;
};

Algebra make_algebra(std::vector<int> blocks, std::vector<double> weights,
                     ToleranceProfile tol = {});

cd trace(const Algebra& A, const Element& x);
cd hs_inner(const Algebra& A, const Element& x, const Element& y);
double hs_norm(const Algebra& A, const Element& x);
double op_norm(const Element& x);
bool is_self_adjoint(const Element& x, double tol);

using RealFunction = std::function<double(double)>;
RealFunction indicator_geq(double eps);
RealFunction inv_sqrt_geq(double eps);

Element functional_calculus(const Algebra& A, const Element& x, const RealFunction& f);

// Orthonormal L^2 bases, as columns of a dim x m matrix.
Mat commutant_l2(const Algebra& A, const std::vector<Element>& S);
Mat bicommutant_l2(const Algebra& A, const std::vector<Element>& S);
std::vector<Element> bicommutant(const Algebra& A, const std::vector<Element>& S);
std::vector<Element> center(const Algebra& A);

std::vector<Element> elements_from_columns(const Algebra& A, const Mat& cols);
Mat columns_from_elements(const Algebra& A, const std::vector<Element>& xs);

Element random_element(const Algebra& A, std::mt19937_64& rng);
Element random_self_adjoint(const Algebra& A, std::mt19937_64& rng);
Vec random_vector(int n, std::mt19937_64& rng);
Mat random_matrix(int r, int c, std::mt19937_64& rng);

}  // namespace opalg
