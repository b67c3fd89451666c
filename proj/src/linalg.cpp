#include "opalg/linalg.hpp"

#include <cmath>
#include <sstream>

namespace opalg {

void fix_phases(Mat& cols) {
  for (int c = 0; c < cols.cols(); ++c) {
    int arg = 0;
    double best = -1;
    for (int r = 0; r < cols.rows(); ++r) {
      double a = std::abs(cols(r, c));
      // small slack so near-ties resolve to the lowest index
      if (a > best * (1 + 1e-12) + 1e-300) {
        best = a;
        arg = r;
      }
    }
    if (best > 0) cols.col(c) *= std::conj(cols(arg, c)) / best;
  }
}

HermEig hermitian_eig(const Mat& H) {
  if (H.rows() != H.cols()) throw Error(ErrorKind::Shape, "eigensolver needs a square matrix");
  HermEig out;
  if (H.rows() == 0) {
    out.values.resize(0);
    out.vectors.resize(0, 0);
    return out;
  }
  Mat Hs = 0.5 * (H + H.adjoint());
  Eigen::SelfAdjointEigenSolver<Mat> es(Hs);
  if (es.info() != Eigen::Success)
    throw Error(ErrorKind::NumericalFailure, "hermitian eigensolver did not converge");
  out.values = es.eigenvalues();
  out.vectors = es.eigenvectors();
  fix_phases(out.vectors);
  return out;
}

double rank_cutoff(double max_eig, const ToleranceProfile& tol) {
  return std::max(tol.rank_rel * std::abs(max_eig), tol.rank_abs);
}

void check_rank_gap(const Eigen::VectorXd& values, double cutoff, const char* where) {
  for (int i = 0; i < values.size(); ++i) {
    double v = std::abs(values(i));
    if (v > cutoff * 1e-2 && v < cutoff * 1e2) {
      std::ostringstream os;
      os << where << ": eigenvalue " << v << " too close to rank cutoff " << cutoff;
      throw Error(ErrorKind::NumericalFailure, os.str());
    }
  }
}

Mat orth(const Mat& A, const ToleranceProfile& tol) {
  int n = A.rows();
  if (A.cols() == 0 || n == 0) return Mat(n, 0);
  // eigenvectors of A A^* with eigenvalue above cutoff span range(A)
  HermEig e = hermitian_eig(A * A.adjoint());
  double cut = rank_cutoff(e.values.cwiseAbs().maxCoeff(), tol);
  int k = 0;
  while (k < n && e.values(n - 1 - k) > cut) ++k;
  Mat Q(n, k);
  for (int c = 0; c < k; ++c) Q.col(c) = e.vectors.col(n - 1 - c);
  return Q;
}

Mat null_space(const Mat& A, const ToleranceProfile& tol) {
  int n = A.cols();
  if (A.rows() == 0) return Mat::Identity(n, n);
  HermEig e = hermitian_eig(A.adjoint() * A);
  double cut = rank_cutoff(e.values.cwiseAbs().maxCoeff(), tol);
  int k = 0;
  while (k < n && e.values(k) <= cut) ++k;
  return e.vectors.leftCols(k);
}

Mat complement(const Mat& Q, int n, const ToleranceProfile& tol) {
  if (Q.cols() == 0) return Mat::Identity(n, n);
  Mat P = Mat::Identity(n, n) - Q * Q.adjoint();
  return orth(P, tol);
}

Mat joint_null_space(const std::vector<Mat>& ops, int n, const ToleranceProfile& tol) {
  Mat H = Mat::Zero(n, n);
  for (const auto& A : ops) H += A.adjoint() * A;
  if (ops.empty() || H.cwiseAbs().maxCoeff() == 0.0) return Mat::Identity(n, n);
  HermEig e = hermitian_eig(H);
  double cut = rank_cutoff(e.values.cwiseAbs().maxCoeff(), tol);
  int k = 0;
  while (k < n && e.values(k) <= cut) ++k;
  return e.vectors.leftCols(k);
}

double containment_residual(const Mat& X, const Mat& Q) {
  if (X.cols() == 0) return 0.0;
  Mat R = X;
  if (Q.cols() > 0) R -= Q * (Q.adjoint() * X);
  double m = 0;
  for (int c = 0; c < R.cols(); ++c) m = std::max(m, R.col(c).norm());
  return m;
}

bool same_subspace(const Mat& A, const Mat& B, double tol) {
  return A.cols() == B.cols() && containment_residual(A, B) <= tol &&
         containment_residual(B, A) <= tol;
}

GramFrame gram_frame(const Mat& G, const ToleranceProfile& tol) {
  int D = G.rows();
  GramFrame F;
  double herm = D ? (G - G.adjoint()).cwiseAbs().maxCoeff() : 0.0;
  double scale = D ? std::max(1.0, G.cwiseAbs().maxCoeff()) : 1.0;
  if (herm > tol.verify * scale)
    throw Error(ErrorKind::PositivityViolation, "Gram matrix is not hermitian");
  HermEig e = hermitian_eig(G);
  F.eigenvalues = e.values;
  if (D == 0) {
    F.coord.resize(0, 0);
    F.lift.resize(0, 0);
    return F;
  }
  double maxe = e.values.cwiseAbs().maxCoeff();
  F.min_eigenvalue = e.values(0);
  if (e.values(0) < -tol.verify * std::max(1.0, maxe)) {
    std::ostringstream os;
    os << "Gram eigenvalue " << e.values(0) << " below -tol";
    throw Error(ErrorKind::PositivityViolation, os.str());
  }
  double cut = rank_cutoff(maxe, tol);
  int r = 0;
  while (r < D && e.values(D - 1 - r) > cut) ++r;
  F.dim = r;
  F.coord.resize(r, D);
  F.lift.resize(D, r);
  for (int c = 0; c < r; ++c) {
    double lam = e.values(D - 1 - c);
    F.coord.row(c) = std::sqrt(lam) * e.vectors.col(D - 1 - c).adjoint();
    F.lift.col(c) = e.vectors.col(D - 1 - c) / std::sqrt(lam);
  }
  return F;
}

Mat descend_operator(const GramFrame& F, const Mat& A, double tol, const char* what) {
  Mat M = F.coord * A * F.lift;
  // A must map ker G into ker G: coord * A * (I - lift*coord) = 0
  Mat leak = F.coord * A - M * F.coord;
  double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  if (leak.size() && leak.cwiseAbs().maxCoeff() > tol * scale * std::max(1.0, F.coord.cwiseAbs().maxCoeff())) {
    std::ostringstream os;
    os << what << ": operator does not preserve the Gram kernel (leak "
       << leak.cwiseAbs().maxCoeff() << ")";
    throw Error(ErrorKind::NumericalFailure, os.str());
  }
  return M;
}

Mat kron(const Mat& A, const Mat& B) {
  Mat K(A.rows() * B.rows(), A.cols() * B.cols());
  for (int i = 0; i < A.rows(); ++i)
    for (int j = 0; j < A.cols(); ++j) K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return K;
}

}  // namespace opalg
