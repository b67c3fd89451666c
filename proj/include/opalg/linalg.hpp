#pragma once

#include "opalg/algebra.hpp"

namespace opalg {

// Ascending eigenvalues; each eigenvector's largest-magnitude entry is real positive.
struct HermEig {
  Eigen::VectorXd values;
  Mat vectors;
};

HermEig hermitian_eig(const Mat& H);
void fix_phases(Mat& cols);

// cutoff = max(rank_rel * max|lambda|, rank_abs)
double rank_cutoff(double max_eig, const ToleranceProfile& tol);

// Throws NumericalFailure when an eigenvalue sits within two decades of the cutoff.
void check_rank_gap(const Eigen::VectorXd& values, double cutoff, const char* where);

// Orthonormal basis of the column span.
Mat orth(const Mat& A, const ToleranceProfile& tol);
// Orthonormal basis of ker A.
Mat null_space(const Mat& A, const ToleranceProfile& tol);
// Orthonormal basis of the orthogonal complement of span(Q) (Q orthonormal) in C^n.
Mat complement(const Mat& Q, int n, const ToleranceProfile& tol);
// Joint null space of a family of square matrices.
Mat joint_null_space(const std::vector<Mat>& ops, int n, const ToleranceProfile& tol);

Mat kron(const Mat& A, const Mat& B);

// Largest distance of the columns of X from span(Q) (Q orthonormal).
double containment_residual(const Mat& X, const Mat& Q);
bool same_subspace(const Mat& A, const Mat& B, double tol);

// Coordinates for the quotient of C^D by ker G, G = Gram of a PSD form.
//   coord  : r x D,  <c, c'>_G = (coord c)^* (coord c')
//   lift   : D x r,  coord * lift = I
struct GramFrame {
  Mat coord;
  Mat lift;
  Eigen::VectorXd eigenvalues;
  int dim = 0;
  double min_eigenvalue = 0.0;
};

GramFrame gram_frame(const Mat& G, const ToleranceProfile& tol);

// Operator A on C^D descended to the frame; throws NumericalFailure if ker G is not preserved.
Mat descend_operator(const GramFrame& F, const Mat& A, double tol, const char* what);

}  // namespace opalg
