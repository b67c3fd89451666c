#include "opalg/star_decomposition.hpp"

#include <cmath>
#include <sstream>

#include "opalg/linalg.hpp"

namespace opalg {

namespace {

Vec vecop(const Mat& A) { return Eigen::Map<const Vec>(A.data(), A.size()); }

// Groups ascending eigenvalues into clusters separated by more than gap.
std::vector<std::vector<int>> clusters(const Eigen::VectorXd& vals, double gap) {
  std::vector<std::vector<int>> out;
  for (int i = 0; i < vals.size(); ++i) {
    if (out.empty() || vals(i) - vals(out.back().back()) > gap) out.push_back({});
    out.back().push_back(i);
  }
  return out;
}

Mat random_combination(const std::vector<Mat>& ops, std::mt19937_64& rng, bool hermitian) {
  Vec c = random_vector(static_cast<int>(ops.size()), rng);
  Mat h = Mat::Zero(ops[0].rows(), ops[0].cols());
  for (std::size_t l = 0; l < ops.size(); ++l) h += c(l) * ops[l];
  if (hermitian) h = (0.5 * (h + h.adjoint())).eval();
  return h;
}

}  // namespace

Element StarDecomposition::to_algebra(const Mat& op) const {
  Element x = algebra.zero();
  for (int b = 0; b < algebra.num_blocks(); ++b) {
    int n = algebra.blocks()[b];
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        x.block(b)(j, k) = units[b][j * n + k].conjugate().cwiseProduct(op).sum() / double(multiplicity[b]);
  }
  return x;
}

Mat StarDecomposition::to_operator(const Element& x) const {
  algebra.check(x);
  Mat op = Mat::Zero(D, D);
  for (int b = 0; b < algebra.num_blocks(); ++b) {
    int n = algebra.blocks()[b];
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        if (x.block(b)(j, k) != cd(0)) op += x.block(b)(j, k) * units[b][j * n + k];
  }
  return op;
}

StarDecomposition decompose_star_algebra(const std::vector<Mat>& basis_in, const Vec& omega,
                                         const ToleranceProfile& tol) {
  if (basis_in.empty()) throw Error(ErrorKind::Shape, "empty operator algebra");
  const int D = static_cast<int>(basis_in[0].rows());
  std::mt19937_64 rng(0x5eed1234ULL);

  // orthonormal (Frobenius) basis of the span
  Mat span(D * D, static_cast<int>(basis_in.size()));
  for (std::size_t l = 0; l < basis_in.size(); ++l) span.col(l) = vecop(basis_in[l]);
  Mat onb = orth(span, tol);
  const int dimA = static_cast<int>(onb.cols());
  std::vector<Mat> A(dimA);
  for (int l = 0; l < dimA; ++l) A[l] = Eigen::Map<const Mat>(onb.col(l).data(), D, D);

  // center: sum_l c_l [A_l, A_m] = 0 for all m
  Mat comm(D * D * dimA, dimA);
  for (int m = 0; m < dimA; ++m)
    for (int l = 0; l < dimA; ++l) comm.block(m * D * D, l, D * D, 1) = vecop(A[l] * A[m] - A[m] * A[l]);
  Mat zc = null_space(comm, tol);
  std::vector<Mat> Z;
  for (int c = 0; c < zc.cols(); ++c) {
    Mat z = Mat::Zero(D, D);
    for (int l = 0; l < dimA; ++l) z += zc(l, c) * A[l];
    Z.push_back(z);
  }
  const int nz = static_cast<int>(Z.size());

  std::vector<Mat> zproj;
  for (int attempt = 0; attempt < 8 && static_cast<int>(zproj.size()) != nz; ++attempt) {
    zproj.clear();
    Mat h = random_combination(Z, rng, true);
    HermEig e = hermitian_eig(h);
    double spread = e.values.cwiseAbs().maxCoeff();
    for (const auto& cl : clusters(e.values, 1e-6 * std::max(spread, 1e-300))) {
      Mat V(D, static_cast<int>(cl.size()));
      for (std::size_t i = 0; i < cl.size(); ++i) V.col(i) = e.vectors.col(cl[i]);
      zproj.push_back(V * V.adjoint());
    }
  }
  if (static_cast<int>(zproj.size()) != nz)
    throw Error(ErrorKind::NumericalFailure, "could not separate minimal central projections");

  StarDecomposition out;
  out.D = D;
  std::vector<int> blocks;
  std::vector<double> weights;
  for (const Mat& z : zproj) {
    HermEig ez = hermitian_eig(z);
    int rk = 0;
    while (rk < D && ez.values(D - 1 - rk) > 0.5) ++rk;
    Mat V = ez.vectors.rightCols(rk);
    std::vector<Mat> comp(dimA);
    Mat cspan(rk * rk, dimA);
    for (int l = 0; l < dimA; ++l) {
      comp[l] = V.adjoint() * A[l] * V;
      cspan.col(l) = vecop(comp[l]);
    }
    int blockdim = static_cast<int>(orth(cspan, tol).cols());
    int n = static_cast<int>(std::lround(std::sqrt(double(blockdim))));
    if (n * n != blockdim || rk % n != 0)
      throw Error(ErrorKind::NumericalFailure, "central summand is not a full matrix block");
    int mult = rk / n;

    std::vector<Mat> e1;  // minimal projections, compressed
    for (int attempt = 0; attempt < 8 && static_cast<int>(e1.size()) != n; ++attempt) {
      e1.clear();
      Mat h = random_combination(comp, rng, true);
      HermEig eh = hermitian_eig(h);
      double spread = std::max(eh.values.cwiseAbs().maxCoeff(), 1e-300);
      auto cls = clusters(eh.values, 1e-6 * spread);
      bool ok = static_cast<int>(cls.size()) == n;
      for (const auto& cl : cls) ok = ok && static_cast<int>(cl.size()) == mult;
      if (!ok) continue;
      for (const auto& cl : cls) {
        Mat W(rk, mult);
        for (int i = 0; i < mult; ++i) W.col(i) = eh.vectors.col(cl[i]);
        e1.push_back(W * W.adjoint());
      }
    }
    if (static_cast<int>(e1.size()) != n)
    {
      std::ostringstream os;
      os << "could not find minimal projections (block " << n << ", multiplicity " << mult << ")";
      throw Error(ErrorKind::NumericalFailure, os.str());
    }

    std::vector<Mat> first(n);
    first[0] = e1[0];
    for (int k = 1; k < n; ++k) {
      bool found = false;
      for (int attempt = 0; attempt < 8 && !found; ++attempt) {
        Mat x = random_combination(comp, rng, false);
        Mat u = e1[0] * x * e1[k];
        double c = (u * u.adjoint()).trace().real() / mult;
        if (c > 1e-8 * std::max(1.0, x.cwiseAbs2().sum())) {
          first[k] = u / std::sqrt(c);
          found = true;
        }
      }
      if (!found) throw Error(ErrorKind::NumericalFailure, "could not build matrix units");
    }
    std::vector<Mat> units(n * n);
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) units[j * n + k] = V * (first[j].adjoint() * first[k]) * V.adjoint();
    out.units.push_back(std::move(units));
    out.multiplicity.push_back(mult);
    blocks.push_back(n);
    weights.push_back(omega.dot(z * omega).real());
  }
  for (double w : weights)
    if (!(w > tol.verify)) throw Error(ErrorKind::NumericalFailure, "vector state is not faithful on the algebra");
  ToleranceProfile t = tol;
  double s = 0;
  for (double w : weights) s += w;
  if (std::abs(s - 1.0) > tol.verify * 100) throw Error(ErrorKind::NumericalFailure, "state is not normalized");
  for (double& w : weights) w /= s;
  out.algebra = Algebra(blocks, weights, t);

  // tracial: <omega, E_jk omega> = delta_jk alpha / n
  for (int b = 0; b < out.algebra.num_blocks(); ++b) {
    int n = blocks[b];
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        cd v = omega.dot(out.units[b][j * n + k] * omega);
        cd expect = j == k ? cd(weights[b] / n) : cd(0);
        if (std::abs(v - expect) > tol.verify * 1e3) {
          std::ostringstream os;
          os << "vector state is not tracial (" << std::abs(v - expect) << ")";
          throw Error(ErrorKind::NumericalFailure, os.str());
        }
      }
  }
  int total = 0;
  for (int n : blocks) total += n * n;
  if (total != dimA) throw Error(ErrorKind::NumericalFailure, "block dimensions do not add up");
  return out;
}

}  // namespace opalg
