#include "opalg/kernels.hpp"

#include <omp.h>

namespace opalg::kernels {

namespace {

void gram_row(const std::vector<Mat>& coef, const std::vector<Mat>& left_ops, int i, Mat& G) {
  const int d1 = static_cast<int>(coef.size());
  const int d2 = left_ops.empty() ? 0 : static_cast<int>(left_ops[0].rows());
  const int m = static_cast<int>(left_ops.size());
  for (int k = 0; k < d1; ++k) {
    auto blk = G.block(i * d2, k * d2, d2, d2);
    blk.setZero();
    for (int q = 0; q < m; ++q) {
      cd c = coef[i](q, k);
      if (c != cd(0)) blk += c * left_ops[q];
    }
  }
}

}  // namespace

Mat fusion_gram_serial(const std::vector<Mat>& coef, const std::vector<Mat>& left_ops) {
  const int d1 = static_cast<int>(coef.size());
  const int d2 = left_ops.empty() ? 0 : static_cast<int>(left_ops[0].rows());
  Mat G(d1 * d2, d1 * d2);
  for (int i = 0; i < d1; ++i) gram_row(coef, left_ops, i, G);
  return G;
}

Mat fusion_gram_parallel(const std::vector<Mat>& coef, const std::vector<Mat>& left_ops) {
  const int d1 = static_cast<int>(coef.size());
  const int d2 = left_ops.empty() ? 0 : static_cast<int>(left_ops[0].rows());
  Mat G(d1 * d2, d1 * d2);
  // rows of blocks are disjoint, so no synchronization is needed
#pragma omp parallel for schedule(static)
  for (int i = 0; i < d1; ++i) gram_row(coef, left_ops, i, G);
  return G;
}

std::vector<Mat> projected_pairs_serial(const std::vector<Mat>& ops, const Mat& vecs, const Mat& proj) {
  std::vector<Mat> out(ops.size());
  for (std::size_t s = 0; s < ops.size(); ++s) out[s] = proj.adjoint() * (ops[s].adjoint() * vecs);
  return out;
}

std::vector<Mat> projected_pairs_parallel(const std::vector<Mat>& ops, const Mat& vecs, const Mat& proj) {
  std::vector<Mat> out(ops.size());
  const int n = static_cast<int>(ops.size());
#pragma omp parallel for schedule(static)
  for (int s = 0; s < n; ++s) out[s] = proj.adjoint() * (ops[s].adjoint() * vecs);
  return out;
}

void solve_upper_right_serial(std::vector<Mat>& Bs, const Mat& U) {
  for (auto& B : Bs) U.triangularView<Eigen::Upper>().solveInPlace<Eigen::OnTheRight>(B);
}

void solve_upper_right_parallel(std::vector<Mat>& Bs, const Mat& U) {
  const int n = static_cast<int>(Bs.size());
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) U.triangularView<Eigen::Upper>().solveInPlace<Eigen::OnTheRight>(Bs[i]);
}

int max_threads() { return omp_get_max_threads(); }

}  // namespace opalg::kernels
