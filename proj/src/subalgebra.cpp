#include "opalg/subalgebra.hpp"

#include <cmath>
#include <sstream>

#include "opalg/linalg.hpp"
#include "opalg/modules.hpp"

namespace opalg {

namespace {

double closure_residual(const Algebra& A, const Mat& B) {
  double worst = 0;
  Mat P = B * B.adjoint();
  Vec one = A.to_l2(A.identity());
  worst = std::max(worst, (one - P * one).norm());
  std::vector<Element> els = elements_from_columns(A, B);
  for (int i = 0; i < B.cols(); ++i) {
    Vec s = A.star_l2(B.col(i));
    worst = std::max(worst, (s - P * s).norm());
    Mat L = A.left_mult(els[i]);
    Mat prods = L * B;
    Mat res = prods - P * prods;
    for (int j = 0; j < res.cols(); ++j) worst = std::max(worst, res.col(j).norm());
  }
  return worst;
}

}  // namespace

Subalgebra::Subalgebra(Algebra parent, Mat basis_l2)
    : parent_(std::move(parent)), basis_(std::move(basis_l2)) {
  if (basis_.rows() != parent_.dim()) throw Error(ErrorKind::Shape, "subalgebra basis has wrong length");
  const auto& tol = parent_.tol();
  Mat gram = basis_.adjoint() * basis_;
  if (basis_.cols() && (gram - Mat::Identity(basis_.cols(), basis_.cols())).cwiseAbs().maxCoeff() > tol.verify * 10)
    throw Error(ErrorKind::NotAnAlgebra, "subalgebra basis is not orthonormal");
  // scale by the largest basis element, whose sup norm can exceed 1
  double scale = 1.0;
  for (int i = 0; i < basis_.cols(); ++i)
    scale = std::max(scale, parent_.from_l2(basis_.col(i)).max_abs());
  double r = closure_residual(parent_, basis_);
  if (r > tol.verify * 10 * scale) {
    std::ostringstream os;
    os << "span is not a unital *-algebra (residual " << r << ")";
    throw Error(ErrorKind::NotAnAlgebra, os.str());
  }
}

bool Subalgebra::contains(const Element& x, double tol) const {
  Vec v = parent_.to_l2(x);
  return (v - basis_ * (basis_.adjoint() * v)).norm() <= tol * std::max(1.0, v.norm());
}

Subalgebra generate_subalgebra(const Algebra& A, const std::vector<Element>& generators) {
  // close span{1, g, g^*} under left multiplication by the generators and their adjoints
  std::vector<Mat> L;
  for (const auto& g : generators) {
    L.push_back(A.left_mult(g));
    L.push_back(A.left_mult(g.adjoint()));
  }
  Mat W = A.to_l2(A.identity());
  W = orth(W, A.tol());
  while (true) {
    Mat all(A.dim(), W.cols() * (1 + static_cast<int>(L.size())));
    all.leftCols(W.cols()) = W;
    for (std::size_t m = 0; m < L.size(); ++m) all.middleCols((m + 1) * W.cols(), W.cols()) = L[m] * W;
    Mat next = orth(all, A.tol());
    if (next.cols() == W.cols()) break;
    W = next;
  }
  fix_phases(W);
  return Subalgebra(A, W);
}

Subalgebra scalar_subalgebra(const Algebra& A) {
  Mat B = A.to_l2(A.identity());
  return Subalgebra(A, B);
}

Subalgebra full_subalgebra(const Algebra& A) {
  return Subalgebra(A, Mat::Identity(A.dim(), A.dim()));
}

Subalgebra subalgebra_from_span(const Algebra& A, const Mat& span_l2) {
  Mat B = orth(span_l2, A.tol());
  fix_phases(B);
  return Subalgebra(A, B);
}

Element cond_expect(const Subalgebra& Q, const Element& x) {
  const Mat& B = Q.basis_l2();
  return Q.parent().from_l2(B * (B.adjoint() * Q.parent().to_l2(x)));
}

Element q_inner(const Subalgebra& Q, const Element& x, const Element& y) {
  return cond_expect(Q, x.adjoint() * y);
}

std::vector<Mat> BasicConstruction::basis_operators() const {
  std::vector<Mat> out;
  for (int c = 0; c < algebra_basis.cols(); ++c)
    out.push_back(Eigen::Map<const Mat>(algebra_basis.col(c).data(), ambient_dim, ambient_dim));
  return out;
}

double BasicConstruction::span_residual(const Mat& T) const {
  Eigen::Map<const Vec> v(T.data(), T.size());
  return (v - algebra_basis * (algebra_basis.adjoint() * v)).norm();
}

cd BasicConstruction::tau_hat(const Mat& T) const {
  Eigen::Map<const Vec> v(T.data(), T.size());
  Vec c = algebra_basis.adjoint() * v;
  return (functional.transpose() * c)(0);
}

BasicConstruction basic_construction(const Subalgebra& Q) {
  const Algebra& A = Q.parent();
  int d = A.dim();
  BasicConstruction bc;
  bc.ambient_dim = d;
  bc.e_Q = Q.projector();

  std::vector<Element> u;
  std::vector<Mat> L;
  for (int k = 0; k < d; ++k) {
    u.push_back(A.basis(k));
    L.push_back(A.left_mult(u.back()));
  }
  Mat ops(d * d, d * d);
  Vec rhs(d * d);
  for (int i = 0; i < d; ++i) {
    Mat left = L[i] * bc.e_Q;
    for (int j = 0; j < d; ++j) {
      Mat T = left * L[j];
      ops.col(i * d + j) = Eigen::Map<const Vec>(T.data(), T.size());
      rhs(i * d + j) = trace(A, u[i] * u[j]);
    }
  }
  bc.algebra_basis = orth(ops, A.tol());
  // functional . (basis^* vec(O_ij)) = tau(u_i u_j)
  Mat C = (bc.algebra_basis.adjoint() * ops).transpose();
  bc.functional = C.colPivHouseholderQr().solve(rhs);
  double res = (C * bc.functional - rhs).norm();
  if (res > A.tol().verify * std::max(1.0, rhs.norm()) * 10) {
    std::ostringstream os;
    os << "lifted trace system inconsistent (residual " << res << ")";
    throw Error(ErrorKind::NumericalFailure, os.str());
  }
  return bc;
}

double right_invariance_residual(const Subalgebra& Q, const Mat& V) {
  const Algebra& A = Q.parent();
  double worst = 0;
  for (const auto& q : Q.basis()) {
    Mat R = A.right_mult(q) * V;
    worst = std::max(worst, containment_residual(R, V));
  }
  return worst;
}

double dimQ(const Subalgebra& Q, const BasicConstruction& bc, const Mat& V) {
  const Algebra& A = Q.parent();
  const auto& tol = A.tol();
  if (V.rows() != A.dim()) throw Error(ErrorKind::Shape, "subspace basis has wrong length");
  if (right_invariance_residual(Q, V) > tol.verify * 10)
    throw Error(ErrorKind::NotAModule, "subspace is not right Q-invariant");
  Mat P = V * V.adjoint();
  if (bc.span_residual(P) > tol.verify * 10 * std::max<double>(1.0, V.cols()))
    throw Error(ErrorKind::NumericalFailure, "projection escapes the basic construction");
  double via_trace = bc.tau_hat(P).real();
  QModule M = pimsner_popa_basis(Q, V);
  double via_pp = 0;
  for (const auto& p : M.projections) via_pp += trace(A, p).real();
  if (std::abs(via_trace - via_pp) > tol.report) {
    std::ostringstream os;
    os << "dim_Q disagreement: lifted trace " << via_trace << " vs Pimsner-Popa " << via_pp;
    throw Error(ErrorKind::NumericalFailure, os.str());
  }
  return via_trace;
}

double dimQ(const Subalgebra& Q, const Mat& V) { return dimQ(Q, basic_construction(Q), V); }

}  // namespace opalg
