#include "opalg/modules.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "opalg/linalg.hpp"

namespace opalg {

Element QModule::expand(const Element& v) const {
  const Algebra& A = Q.parent();
  Element out = A.zero();
  for (const auto& xi : pp_basis) out += xi * q_inner(Q, xi, v);
  return out;
}

std::pair<Element, Element> normalize_conditional(const Subalgebra& Q, const Element& xi, double eps) {
  const Algebra& A = Q.parent();
  Element a = q_inner(Q, xi, xi);
  a = 0.5 * (a + a.adjoint());
  Element p = functional_calculus(A, a, indicator_geq(eps));
  Element b = functional_calculus(A, a, inv_sqrt_geq(eps));
  return {xi * b * p, p};
}

QModule pimsner_popa_basis(const Subalgebra& Q, const Mat& V) {
  const Algebra& A = Q.parent();
  const auto& tol = A.tol();
  QModule M{Q, V, {}, {}};
  std::vector<Element> cand = elements_from_columns(A, V);
  const int n = static_cast<int>(cand.size());
  const double done = 1e-8;
  double prev_total = std::numeric_limits<double>::infinity();

  for (int iter = 0; iter <= 2 * A.dim() + 2; ++iter) {
    int pick = -1;
    double best = done, total = 0;
    Element pick_res;
    for (int j = 0; j < n; ++j) {
      Element r = cand[j] - M.expand(cand[j]);
      double nr = hs_norm(A, r);
      total += nr * nr;
      if (nr > best) {
        best = nr;
        pick = j;
        pick_res = r;
      }
    }
    if (pick < 0) return M;
    if (!(total < prev_total))
      throw Error(ErrorKind::NumericalFailure, "conditional Gram-Schmidt residual did not decrease");
    prev_total = total;
    Element a = q_inner(Q, pick_res, pick_res);
    double eps = std::max(tol.rank_rel * op_norm(a), tol.rank_abs);
    auto [eta, p] = normalize_conditional(Q, pick_res, eps);
    if (trace(A, p).real() <= 0.0)
      throw Error(ErrorKind::NumericalFailure, "conditional normalization produced a zero projection");
    M.pp_basis.push_back(eta);
    M.projections.push_back(p);
  }
  throw Error(ErrorKind::NumericalFailure, "conditional Gram-Schmidt did not terminate");
}

QModule module_from_generators(const Subalgebra& Q, const std::vector<Element>& S,
                               const std::vector<Mat>& koopman) {
  const Algebra& A = Q.parent();
  const auto& tol = A.tol();
  Mat W = orth(columns_from_elements(A, S), tol);
  std::vector<Mat> maps;
  for (const auto& q : Q.basis()) maps.push_back(A.right_mult(q));
  for (const auto& U : koopman) maps.push_back(U);
  while (true) {
    Mat all(A.dim(), W.cols() * (1 + static_cast<int>(maps.size())));
    all.leftCols(W.cols()) = W;
    for (std::size_t m = 0; m < maps.size(); ++m) all.middleCols((m + 1) * W.cols(), W.cols()) = maps[m] * W;
    Mat next = orth(all, tol);
    if (next.cols() == W.cols()) break;
    W = next;
  }
  fix_phases(W);
  return QModule{Q, W, {}, {}};
}

}  // namespace opalg
