#include "opalg/algebra.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "opalg/linalg.hpp"

namespace opalg {

const char* error_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::WeightSum: return "WeightSumError";
    case ErrorKind::Shape: return "ShapeError";
    case ErrorKind::NotSelfAdjoint: return "NotSelfAdjoint";
    case ErrorKind::NumericalFailure: return "NumericalFailure";
    case ErrorKind::NotAModule: return "NotAModule";
    case ErrorKind::Identification: return "IdentificationError";
    case ErrorKind::Mass: return "MassError";
    case ErrorKind::NotAutomorphism: return "NotAutomorphism";
    case ErrorKind::NotTracePreserving: return "NotTracePreserving";
    case ErrorKind::RelationViolated: return "RelationViolated";
    case ErrorKind::SubalgebraNotInvariant: return "SubalgebraNotInvariant";
    case ErrorKind::NotErgodic: return "NotErgodic";
    case ErrorKind::NotAbelian: return "NotAbelian";
    case ErrorKind::BudgetExceeded: return "BudgetExceeded";
    case ErrorKind::PositivityViolation: return "PositivityViolation";
    case ErrorKind::Face: return "FaceError";
    case ErrorKind::NotAnAlgebra: return "NotAnAlgebra";
    case ErrorKind::NotCentral: return "NotCentral";
    case ErrorKind::CPViolation: return "CPViolation";
    case ErrorKind::IterationLimit: return "IterationLimit";
    case ErrorKind::EmptyF: return "EmptyF";
    case ErrorKind::UnknownCommand: return "UnknownCommand";
    case ErrorKind::Parse: return "ParseError";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Error";
}

int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::BudgetExceeded:
      return 4;
    case ErrorKind::NumericalFailure:
    case ErrorKind::PositivityViolation:
    case ErrorKind::NotAnAlgebra:
    case ErrorKind::CPViolation:
    case ErrorKind::IterationLimit:
      return 3;
    default:
      return 2;
  }
}

void ToleranceProfile::validate() const {
  if (!(rank_rel > 0 && rank_abs > 0 && verify > 0 && report > 0))
    throw Error(ErrorKind::InvalidArgument, "tolerances must be positive");
  if (rank_abs > rank_rel)
    throw Error(ErrorKind::InvalidArgument, "rank_abs must not exceed rank_rel");
}

// ---- Element ----

Element Element::adjoint() const {
  std::vector<Mat> out;
  out.reserve(blocks_.size());
  for (const auto& b : blocks_) out.push_back(b.adjoint());
  return Element(std::move(out));
}

Element Element::transpose() const {
  std::vector<Mat> out;
  out.reserve(blocks_.size());
  for (const auto& b : blocks_) out.push_back(b.transpose());
  return Element(std::move(out));
}

double Element::max_abs() const {
  double m = 0;
  for (const auto& b : blocks_)
    if (b.size()) m = std::max(m, b.cwiseAbs().maxCoeff());
  return m;
}

static void same_blocks(const Element& a, const Element& b) {
  if (a.num_blocks() != b.num_blocks())
    throw Error(ErrorKind::Shape, "block count mismatch");
  for (std::size_t i = 0; i < a.num_blocks(); ++i)
    if (a.block(i).rows() != b.block(i).rows() || a.block(i).cols() != b.block(i).cols())
      throw Error(ErrorKind::Shape, "block shape mismatch");
}

Element& Element::operator+=(const Element& o) {
  same_blocks(*this, o);
  for (std::size_t i = 0; i < blocks_.size(); ++i) blocks_[i] += o.blocks_[i];
  return *this;
}

Element& Element::operator-=(const Element& o) {
  same_blocks(*this, o);
  for (std::size_t i = 0; i < blocks_.size(); ++i) blocks_[i] -= o.blocks_[i];
  return *this;
}

Element& Element::operator*=(cd s) {
  for (auto& b : blocks_) b *= s;
  return *this;
}

Element operator+(Element a, const Element& b) { return a += b; }
Element operator-(Element a, const Element& b) { return a -= b; }
Element operator*(cd s, Element a) { return a *= s; }
Element operator*(Element a, cd s) { return a *= s; }

Element operator*(const Element& a, const Element& b) {
  same_blocks(a, b);
  std::vector<Mat> out(a.num_blocks());
  for (std::size_t i = 0; i < a.num_blocks(); ++i) out[i] = a.block(i) * b.block(i);
  return Element(std::move(out));
}

// ---- Algebra ----

Algebra::Algebra(std::vector<int> blocks, std::vector<double> weights, ToleranceProfile tol)
    : blocks_(std::move(blocks)), weights_(std::move(weights)), tol_(tol) {
  tol_.validate();
  if (blocks_.empty()) throw Error(ErrorKind::Shape, "algebra needs at least one block");
  if (blocks_.size() != weights_.size())
    throw Error(ErrorKind::Shape, "blocks and weights differ in length");
  for (int n : blocks_)
    if (n < 1) throw Error(ErrorKind::Shape, "block dimensions must be >= 1");
  for (double w : weights_)
    if (!(w > 0)) throw Error(ErrorKind::WeightSum, "weights must be positive");
  double s = std::accumulate(weights_.begin(), weights_.end(), 0.0);
  if (std::abs(s - 1.0) > tol_.verify) {
    std::ostringstream os;
    os << "weights sum to " << s;
    throw Error(ErrorKind::WeightSum, os.str());
  }
  for (double& w : weights_) w /= s;

  offsets_.resize(blocks_.size());
  scale_.resize(blocks_.size());
  int off = 0;
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    offsets_[b] = off;
    off += blocks_[b] * blocks_[b];
    scale_[b] = std::sqrt(weights_[b] / blocks_[b]);
  }
  dim_ = off;
  star_perm_.resize(dim_);
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    int n = blocks_[b];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) star_perm_[offsets_[b] + i * n + j] = offsets_[b] + j * n + i;
  }
}

bool Algebra::is_commutative() const {
  for (int n : blocks_)
    if (n != 1) return false;
  return true;
}

Element Algebra::zero() const {
  std::vector<Mat> out;
  for (int n : blocks_) out.push_back(Mat::Zero(n, n));
  return Element(std::move(out));
}

Element Algebra::identity() const {
  std::vector<Mat> out;
  for (int n : blocks_) out.push_back(Mat::Identity(n, n));
  return Element(std::move(out));
}

Element Algebra::matrix_unit(int b, int i, int j) const {
  Element e = zero();
  e.block(b)(i, j) = 1.0;
  return e;
}

void Algebra::coordinate(int k, int& b, int& i, int& j) const {
  if (k < 0 || k >= dim_) throw Error(ErrorKind::Shape, "coordinate out of range");
  b = 0;
  while (b + 1 < num_blocks() && offsets_[b + 1] <= k) ++b;
  int r = k - offsets_[b];
  i = r / blocks_[b];
  j = r % blocks_[b];
}

Element Algebra::basis(int k) const {
  int b, i, j;
  coordinate(k, b, i, j);
  Element e = zero();
  e.block(b)(i, j) = 1.0 / scale_[b];
  return e;
}

void Algebra::check(const Element& x) const {
  if (static_cast<int>(x.num_blocks()) != num_blocks())
    throw Error(ErrorKind::Shape, "element has wrong number of blocks");
  for (int b = 0; b < num_blocks(); ++b)
    if (x.block(b).rows() != blocks_[b] || x.block(b).cols() != blocks_[b])
      throw Error(ErrorKind::Shape, "element block has wrong size");
}

Vec Algebra::to_l2(const Element& x) const {
  check(x);
  Vec v(dim_);
  for (int b = 0; b < num_blocks(); ++b) {
    int n = blocks_[b];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) v(offsets_[b] + i * n + j) = scale_[b] * x.block(b)(i, j);
  }
  return v;
}

Element Algebra::from_l2(const Vec& v) const {
  if (v.size() != dim_) throw Error(ErrorKind::Shape, "L2 vector has wrong length");
  Element x = zero();
  for (int b = 0; b < num_blocks(); ++b) {
    int n = blocks_[b];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) x.block(b)(i, j) = v(offsets_[b] + i * n + j) / scale_[b];
  }
  return x;
}

// Row-major vec: vec(xy) = (x (x) I) vec(y) and vec(xy) = (I (x) y^T) vec(x), blockwise.
Mat Algebra::left_mult(const Element& x) const {
  check(x);
  Mat L = Mat::Zero(dim_, dim_);
  for (int b = 0; b < num_blocks(); ++b) {
    int n = blocks_[b], o = offsets_[b];
    for (int i = 0; i < n; ++i)
      for (int l = 0; l < n; ++l) {
        cd c = x.block(b)(i, l);
        if (c == cd(0)) continue;
        for (int j = 0; j < n; ++j) L(o + i * n + j, o + l * n + j) = c;
      }
  }
  return L;
}

Mat Algebra::right_mult(const Element& y) const {
  check(y);
  Mat R = Mat::Zero(dim_, dim_);
  for (int b = 0; b < num_blocks(); ++b) {
    int n = blocks_[b], o = offsets_[b];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int l = 0; l < n; ++l) {
          cd c = y.block(b)(l, j);
          if (c != cd(0)) R(o + i * n + j, o + i * n + l) = c;
        }
  }
  return R;
}

Vec Algebra::star_l2(const Vec& v) const {
  Vec out(dim_);
  for (int k = 0; k < dim_; ++k) out(k) = std::conj(v(star_perm_[k]));
  return out;
}

bool Algebra::same_shape(const Algebra& o) const {
  if (blocks_ != o.blocks_) return false;
  for (std::size_t i = 0; i < weights_.size(); ++i)
    if (std::abs(weights_[i] - o.weights_[i]) > tol_.verify) return false;
  return true;
}

Algebra make_algebra(std::vector<int> blocks, std::vector<double> weights, ToleranceProfile tol) {
  return Algebra(std::move(blocks), std::move(weights), tol);
}

cd trace(const Algebra& A, const Element& x) {
  A.check(x);
  cd t = 0;
  for (int b = 0; b < A.num_blocks(); ++b)
    t += A.weights()[b] * x.block(b).trace() / double(A.blocks()[b]);
  return t;
}

cd hs_inner(const Algebra& A, const Element& x, const Element& y) {
  return A.to_l2(x).dot(A.to_l2(y));
}

double hs_norm(const Algebra& A, const Element& x) { return A.to_l2(x).norm(); }

double op_norm(const Element& x) {
  double m = 0;
  for (const auto& b : x.blocks()) {
    if (!b.size()) continue;
    Eigen::JacobiSVD<Mat> svd(b);
    m = std::max(m, svd.singularValues()(0));
  }
  return m;
}

bool is_self_adjoint(const Element& x, double tol) {
  for (const auto& b : x.blocks())
    if (b.size() && (b - b.adjoint()).cwiseAbs().maxCoeff() > tol) return false;
  return true;
}

RealFunction indicator_geq(double eps) {
  return [eps](double t) { return t >= eps ? 1.0 : 0.0; };
}

RealFunction inv_sqrt_geq(double eps) {
  return [eps](double t) { return t >= eps ? 1.0 / std::sqrt(t) : 0.0; };
}

Element functional_calculus(const Algebra& A, const Element& x, const RealFunction& f) {
  A.check(x);
  if (!is_self_adjoint(x, A.tol().verify * std::max(1.0, x.max_abs())))
    throw Error(ErrorKind::NotSelfAdjoint, "functional calculus needs a self-adjoint element");
  Element out = A.zero();
  for (int b = 0; b < A.num_blocks(); ++b) {
    Mat h = 0.5 * (x.block(b) + x.block(b).adjoint());
    HermEig e = hermitian_eig(h);
    Eigen::VectorXd fv(e.values.size());
    for (int i = 0; i < e.values.size(); ++i) fv(i) = f(e.values(i));
    out.block(b) = e.vectors * fv.cast<cd>().asDiagonal() * e.vectors.adjoint();
  }
  return out;
}

std::vector<Element> elements_from_columns(const Algebra& A, const Mat& cols) {
  std::vector<Element> out;
  out.reserve(cols.cols());
  for (int c = 0; c < cols.cols(); ++c) out.push_back(A.from_l2(cols.col(c)));
  return out;
}

Mat columns_from_elements(const Algebra& A, const std::vector<Element>& xs) {
  Mat M(A.dim(), static_cast<int>(xs.size()));
  for (std::size_t c = 0; c < xs.size(); ++c) M.col(c) = A.to_l2(xs[c]);
  return M;
}

// x commutes with s  <=>  (L_s - R_s) x = 0 in L^2 coordinates.
Mat commutant_l2(const Algebra& A, const std::vector<Element>& S) {
  int d = A.dim();
  if (S.empty()) return Mat::Identity(d, d);
  Mat stacked(d * static_cast<int>(S.size()), d);
  for (std::size_t i = 0; i < S.size(); ++i)
    stacked.middleRows(i * d, d) = A.left_mult(S[i]) - A.right_mult(S[i]);
  Mat H = stacked.adjoint() * stacked;
  HermEig e = hermitian_eig(H);
  double cut = rank_cutoff(e.values.cwiseAbs().maxCoeff(), A.tol());
  check_rank_gap(e.values, cut, "commutant");
  int k = 0;
  while (k < d && e.values(k) <= cut) ++k;
  Mat N = e.vectors.leftCols(k);
  fix_phases(N);
  return N;
}

Mat bicommutant_l2(const Algebra& A, const std::vector<Element>& S) {
  std::vector<Element> gens;
  for (const auto& s : S) {
    A.check(s);
    gens.push_back(s);
    gens.push_back(s.adjoint());
  }
  Mat c1 = commutant_l2(A, gens);
  return commutant_l2(A, elements_from_columns(A, c1));
}

std::vector<Element> bicommutant(const Algebra& A, const std::vector<Element>& S) {
  return elements_from_columns(A, bicommutant_l2(A, S));
}

// Normalized block units; they span A' cap A.
std::vector<Element> center(const Algebra& A) {
  std::vector<Element> out;
  for (int b = 0; b < A.num_blocks(); ++b) {
    Element z = A.zero();
    z.block(b) = Mat::Identity(A.blocks()[b], A.blocks()[b]) / std::sqrt(A.weights()[b]);
    out.push_back(z);
  }
  return out;
}

Vec random_vector(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = cd(g(rng), g(rng));
  return v;
}

Mat random_matrix(int r, int c, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Mat m(r, c);
  for (int j = 0; j < c; ++j)
    for (int i = 0; i < r; ++i) m(i, j) = cd(g(rng), g(rng));
  return m;
}

Element random_element(const Algebra& A, std::mt19937_64& rng) {
  Element x = A.zero();
  for (int b = 0; b < A.num_blocks(); ++b)
    x.block(b) = random_matrix(A.blocks()[b], A.blocks()[b], rng);
  return x;
}

Element random_self_adjoint(const Algebra& A, std::mt19937_64& rng) {
  Element x = random_element(A, rng);
  return 0.5 * (x + x.adjoint());
}

}  // namespace opalg
