#include "opalg/fusion.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "opalg/kernels.hpp"

namespace opalg {

Identification identity_identification(const Subalgebra& Q) { return Identification{Q.basis_l2()}; }

void verify_identification(const Subalgebra& Q1, const Subalgebra& Q2, const Identification& id) {
  const Algebra& A1 = Q1.parent();
  const Algebra& A2 = Q2.parent();
  const double tol = std::max(A1.tol().verify, A2.tol().verify) * 100;
  const Mat& B1 = Q1.basis_l2();
  const Mat& B2 = Q2.basis_l2();
  const Mat& I = id.image;
  auto fail = [](const std::string& m) { throw Error(ErrorKind::Identification, m); };
  if (I.rows() != A2.dim() || I.cols() != B1.cols()) fail("image has wrong shape");
  if (B1.cols() != B2.cols()) fail("subalgebras differ in dimension");
  if (containment_residual(I, B2) > tol) fail("image leaves the target subalgebra");
  // unit, trace, star, products
  auto iota = [&](const Vec& v1) -> Element { return A2.from_l2(I * (B1.adjoint() * v1)); };
  Element one = iota(A1.to_l2(A1.identity()));
  if ((one - A2.identity()).max_abs() > tol) fail("unit is not preserved");
  std::vector<Element> q1 = Q1.basis();
  std::vector<Element> q2(q1.size());
  for (std::size_t i = 0; i < q1.size(); ++i) q2[i] = A2.from_l2(I.col(i));
  for (std::size_t i = 0; i < q1.size(); ++i) {
    if (std::abs(trace(A1, q1[i]) - trace(A2, q2[i])) > tol) fail("trace is not preserved");
    if ((iota(A1.to_l2(q1[i].adjoint())) - q2[i].adjoint()).max_abs() > tol * std::max(1.0, q2[i].max_abs()))
      fail("adjoint is not preserved");
    for (std::size_t j = 0; j < q1.size(); ++j) {
      Element lhs = iota(A1.to_l2(q1[i] * q1[j]));
      Element rhs = q2[i] * q2[j];
      if ((lhs - rhs).max_abs() > tol * std::max(1.0, rhs.max_abs())) fail("product is not preserved");
    }
  }
}

FusionSpace::FusionSpace(Subalgebra Q1, Subalgebra Q2, Identification id, bool parallel)
    : Q1_(std::move(Q1)), Q2_(std::move(Q2)), id_(std::move(id)) {
  verify_identification(Q1_, Q2_, id_);
  const Algebra& A1 = Q1_.parent();
  const Algebra& A2 = Q2_.parent();
  const int d1 = A1.dim(), d2 = A2.dim();
  const Mat& B1 = Q1_.basis_l2();

  std::vector<Mat> coef(d1);
  for (int i = 0; i < d1; ++i) coef[i] = B1.adjoint() * A1.left_mult(A1.basis(i).adjoint());
  std::vector<Mat> left_ops(B1.cols());
  for (int m = 0; m < B1.cols(); ++m) left_ops[m] = A2.left_mult(A2.from_l2(id_.image.col(m)));
  gram_ = parallel ? kernels::fusion_gram_parallel(coef, left_ops)
                   : kernels::fusion_gram_serial(coef, left_ops);
  ToleranceProfile tol = A1.tol();
  frame_ = gram_frame(gram_, tol);

  Vec one2 = A2.to_l2(A2.identity());
  Mat E(d1 * d2, d1);
  E.setZero();
  for (int i = 0; i < d1; ++i) E.block(i * d2, i, d2, 1) = one2;
  iota1_ = frame_.coord * E;
}

Vec FusionSpace::coeffs(const Element& x, const Element& y) const {
  Vec a = left().to_l2(x), b = right().to_l2(y);
  Vec c(a.size() * b.size());
  for (int i = 0; i < a.size(); ++i) c.segment(i * b.size(), b.size()) = a(i) * b;
  return c;
}

Mat FusionSpace::descend(const Mat& A, const char* what) const {
  return descend_operator(frame_, A, left().tol().verify * 1e3, what);
}

Mat FusionSpace::left_action(const Element& x) const {
  return descend(kron(left().left_mult(x), Mat::Identity(right().dim(), right().dim())), "left action");
}

Mat FusionSpace::right_action(const Element& y) const {
  return descend(kron(Mat::Identity(left().dim(), left().dim()), right().right_mult(y)), "right action");
}

Mat FusionSpace::q_image() const { return iota1_ * Q1_.basis_l2(); }

FusionSpace build_fusion(const Subalgebra& Q1, const Subalgebra& Q2, const Identification& id, bool parallel) {
  return FusionSpace(Q1, Q2, id, parallel);
}

FusionSpace build_fusion(const Subalgebra& Q, bool parallel) {
  return FusionSpace(Q, Q, identity_identification(Q), parallel);
}

FusionVector embed(const FusionSpace& F, const Element& x, const Element& y) {
  return F.from_coeffs(F.coeffs(x, y));
}

cd fusion_inner(const FusionVector& v, const FusionVector& w) { return v.dot(w); }

FusionVector module_actions(const FusionSpace& F, Side side, const Element& x, const FusionVector& v) {
  if (v.size() != F.dim()) throw Error(ErrorKind::Shape, "fusion vector has wrong length");
  return side == Side::Left ? Vec(F.left_action(x) * v) : Vec(F.right_action(x) * v);
}

Element corner_project(const FusionSpace& F, const FusionVector& v) {
  if (v.size() != F.dim()) throw Error(ErrorKind::Shape, "fusion vector has wrong length");
  return F.left().from_l2(F.iota1().adjoint() * v);
}

Mat convolution_operator(const FusionSpace& F, const FusionVector& K) {
  const Algebra& A1 = F.left();
  const Algebra& A2 = F.right();
  if (K.size() != F.dim()) throw Error(ErrorKind::Shape, "fusion vector has wrong length");
  const int d1 = A1.dim(), d2 = A2.dim();
  // representative coefficients as a d1 x d2 matrix, then right-multiply the second leg
  Vec kappa = F.frame().lift * K;
  Mat Km(d1, d2);
  for (int i = 0; i < d1; ++i) Km.row(i) = kappa.segment(i * d2, d2).transpose();
  Mat Pc = F.iota1().adjoint() * F.frame().coord;
  Mat T(d1, d2);
  for (int m = 0; m < d2; ++m) {
    Mat R = A2.right_mult(A2.basis(m));
    Mat Kr = Km * R.transpose();
    Vec c(d1 * d2);
    for (int i = 0; i < d1; ++i) c.segment(i * d2, d2) = Kr.row(i).transpose();
    T.col(m) = Pc * c;
  }
  return T;
}

Element cond_convolve(const FusionSpace& F, const FusionVector& K, const Element& f) {
  return F.left().from_l2(convolution_operator(F, K) * F.right().to_l2(f));
}

FusionVector flip_adjoint(const FusionSpace& F, const FusionVector& K) {
  const Algebra& A = F.left();
  if (!A.same_shape(F.right())) throw Error(ErrorKind::Shape, "flip adjoint needs equal algebras");
  const int d = A.dim();
  Vec kappa = F.frame().lift * K;
  const auto& perm = A.star_perm();
  Vec out(d * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) out(i * d + j) = std::conj(kappa(perm[j] * d + perm[i]));
  return F.from_coeffs(out);
}

FusionVector fusion_vector_for_operator(const FusionSpace& F, const Mat& T) {
  const int r = F.dim();
  const int n = static_cast<int>(T.size());
  Mat M(n, r);
  for (int k = 0; k < r; ++k) {
    Mat Tk = convolution_operator(F, Vec::Unit(r, k));
    M.col(k) = Eigen::Map<const Vec>(Tk.data(), Tk.size());
  }
  Eigen::Map<const Vec> t(T.data(), T.size());
  Vec K = M.colPivHouseholderQr().solve(t);
  double res = (M * K - t).norm();
  if (res > F.left().tol().verify * 1e3 * std::max(1.0, t.norm())) {
    std::ostringstream os;
    os << "operator is not a conditional convolution (residual " << res << ")";
    throw Error(ErrorKind::NumericalFailure, os.str());
  }
  return K;
}

CHSTruncation chs_truncate(const FusionSpace& F, const FusionVector& K, double eps) {
  const Algebra& A = F.left();
  const auto& tol = A.tol();
  FusionVector Ks = 0.5 * (K + flip_adjoint(F, K));
  CHSTruncation out;
  out.T = convolution_operator(F, Ks);
  double scale = std::max(1.0, out.T.cwiseAbs().maxCoeff());
  if ((out.T - out.T.adjoint()).cwiseAbs().maxCoeff() > tol.verify * 1e3 * scale)
    throw Error(ErrorKind::NotSelfAdjoint, "symmetrized convolution operator is not self-adjoint");
  HermEig e = hermitian_eig(out.T);
  const int d = A.dim();
  if (d && e.values(0) < -eps - tol.verify * scale)
    throw Error(ErrorKind::NotSelfAdjoint, "convolution operator is not positive");
  int k = 0;
  double tail = 0;
  for (int i = 0; i < d; ++i) {
    if (e.values(i) >= eps)
      ++k;
    else
      tail = std::max(tail, std::abs(e.values(i)));
  }
  Mat V = e.vectors.rightCols(k);
  out.projection = V * V.adjoint();
  out.tail_norm = tail;
  out.range = pimsner_popa_basis(F.Q(), V);
  return out;
}

Subalgebra partition_subalgebra(const Algebra& A, const std::vector<int>& partition) {
  if (!A.is_commutative() || static_cast<int>(partition.size()) != A.dim())
    throw Error(ErrorKind::Shape, "partition needs a commutative algebra with one label per point");
  std::map<int, std::vector<int>> fibers;
  for (int x = 0; x < A.dim(); ++x) fibers[partition[x]].push_back(x);
  std::vector<Element> gens;
  for (const auto& [label, pts] : fibers) {
    Element e = A.zero();
    for (int x : pts) e.block(x)(0, 0) = 1.0;
    gens.push_back(e);
  }
  return generate_subalgebra(A, gens);
}

FiberProduct commutative_fiber_oracle(const std::vector<double>& masses, const std::vector<int>& partition,
                                      const ToleranceProfile& tol) {
  const int n = static_cast<int>(masses.size());
  if (static_cast<int>(partition.size()) != n) throw Error(ErrorKind::Shape, "partition length mismatch");
  for (double m : masses)
    if (!(m > 0)) throw Error(ErrorKind::Mass, "masses must be strictly positive");
  Algebra A(std::vector<int>(n, 1), masses, tol);
  std::map<int, double> nu;
  for (int x = 0; x < n; ++x) nu[partition[x]] += A.weights()[x];

  FiberProduct out;
  std::vector<std::vector<double>> mass(n, std::vector<double>(n, 0.0));
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y)
      if (partition[x] == partition[y]) {
        double m = A.weights()[x] * A.weights()[y] / nu[partition[x]];
        out.atoms.push_back({x, y});
        out.masses.push_back(m);
        mass[x][y] = m;
      }

  FusionSpace F = build_fusion(partition_subalgebra(A, partition));
  out.fusion_dim = F.dim();
  out.dims_match = F.dim() == static_cast<int>(out.atoms.size());
  std::vector<Element> delta(n);
  for (int x = 0; x < n; ++x) delta[x] = A.matrix_unit(x, 0, 0);
  std::vector<Vec> emb;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) emb.push_back(embed(F, delta[a], delta[b]));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int e = 0; e < n; ++e) {
          double expect = (a == c && b == e) ? mass[a][b] : 0.0;
          cd got = fusion_inner(emb[a * n + b], emb[c * n + e]);
          out.max_inner_residual = std::max(out.max_inner_residual, std::abs(got - expect));
        }
  return out;
}

}  // namespace opalg
