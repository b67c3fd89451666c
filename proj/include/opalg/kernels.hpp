#pragma once

#include <vector>

#include "opalg/algebra.hpp"

// Hot loops, each in a serial reference form and an OpenMP form.
// The two must agree to rounding; tests compare them.
namespace opalg::kernels {

// Fusion Gram on a_i (x) b_j:  block (i,k) = sum_m coef[i](m,k) * left_ops[m].
//   coef[i] : m x d1   (Q-coordinates of E_Q(a_i^* a_k))
//   left_ops: m matrices d2 x d2 (left multiplication by the identified Q basis)
Mat fusion_gram_serial(const std::vector<Mat>& coef, const std::vector<Mat>& left_ops);
Mat fusion_gram_parallel(const std::vector<Mat>& coef, const std::vector<Mat>& left_ops);

// out[s] = proj^* ops[s]^* vecs   (one p x r block per spanning element s)
std::vector<Mat> projected_pairs_serial(const std::vector<Mat>& ops, const Mat& vecs, const Mat& proj);
std::vector<Mat> projected_pairs_parallel(const std::vector<Mat>& ops, const Mat& vecs, const Mat& proj);

// B <- B U^{-1} for each B, U upper triangular
void solve_upper_right_serial(std::vector<Mat>& Bs, const Mat& U);
void solve_upper_right_parallel(std::vector<Mat>& Bs, const Mat& U);

int max_threads();

}  // namespace opalg::kernels
