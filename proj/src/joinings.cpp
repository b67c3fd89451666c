#include "opalg/joinings.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/SVD>

#include "opalg/linalg.hpp"

namespace opalg {

namespace {

[[noreturn]] void fail(ErrorKind k, const std::string& msg) { throw Error(k, msg); }

const double kSqrt2 = std::sqrt(2.0);

bool same_group(const GroupSpec& a, const GroupSpec& b) {
  return a.kind == b.kind && a.orders == b.orders && a.rank == b.rank &&
         a.num_generators() == b.num_generators();
}

std::vector<Element> matrix_units(const Algebra& A) {
  std::vector<Element> out;
  for (int b = 0; b < A.num_blocks(); ++b)
    for (int i = 0; i < A.blocks()[b]; ++i)
      for (int j = 0; j < A.blocks()[b]; ++j) out.push_back(A.matrix_unit(b, i, j));
  return out;
}

// affine set {r : A r = b} as r = xp + N t
struct AffineSet {
  RVec xp;
  RMat null;
  double inconsistency = 0;
  RVec project(const RVec& x) const { return xp + null * (null.transpose() * (x - xp)); }
};

AffineSet affine_set(const RMat& A, const RVec& b, const ToleranceProfile& tol) {
  const int n = static_cast<int>(A.cols());
  AffineSet s;
  if (A.rows() == 0) {
    s.xp = RVec::Zero(n);
    s.null = RMat::Identity(n, n);
    return s;
  }
  Eigen::BDCSVD<RMat> svd(A, Eigen::ComputeThinU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  double cut = std::max(tol.rank_rel * (sv.size() ? sv(0) : 0.0), tol.rank_abs);
  int rank = 0;
  while (rank < sv.size() && sv(rank) > cut) ++rank;
  RMat U = svd.matrixU().leftCols(rank);
  RMat V = svd.matrixV();
  RVec coef = U.transpose() * b;
  for (int i = 0; i < rank; ++i) coef(i) /= sv(i);
  s.xp = V.leftCols(rank) * coef;
  s.null = V.rightCols(n - rank);
  s.inconsistency = (A * s.xp - b).norm();
  return s;
}

}  // namespace

JoiningProblem::JoiningProblem(DynamicalSystem M, DynamicalSystem N, Identification id)
    : M_(std::move(M)), N_(std::move(N)), id_(std::move(id)) {
  verify_identification(M_.Q(), N_.Q(), id_);
  if (!same_group(M_.group(), N_.group())) fail(ErrorKind::InvalidArgument, "systems carry different groups");
  const Algebra& AM = M_.algebra();
  const Algebra& AN = N_.algebra();
  int total = 0;
  for (int i = 0; i < AM.num_blocks(); ++i)
    for (int j = 0; j < AN.num_blocks(); ++j) {
      int s = AM.blocks()[i] * AN.blocks()[j];
      sizes_.push_back(s);
      poffset_.push_back(nparams_);
      nparams_ += s * s;
      total += s;
    }
  if (total > 400) fail(ErrorKind::BudgetExceeded, "joining ambient algebra exceeds size 400");

  std::vector<Eigen::RowVectorXd> rows;
  std::vector<double> rhs;
  std::vector<Element> uM = matrix_units(AM), uN = matrix_units(AN);
  for (const auto& u : uM) append_rows({u, AN.identity(), trace(AM, u)}, rows, rhs);
  for (const auto& v : uN) append_rows({AM.identity(), v, trace(AN, v)}, rows, rhs);
  std::vector<Element> q = M_.Q().basis();
  for (std::size_t a = 0; a < q.size(); ++a)
    for (int m = 0; m < id_.image.cols(); ++m)
      append_rows({q[a], AN.from_l2(id_.image.col(m)), trace(AM, q[a] * q[m])}, rows, rhs);
  for (std::size_t g = 0; g < M_.koopman().size(); ++g) {
    const Mat& UM = M_.koopman()[g];
    const Mat& UN = N_.koopman()[g];
    for (const auto& u : uM) {
      Element su = AM.from_l2(UM * AM.to_l2(u));
      for (const auto& v : uN) {
        Element sv = AN.from_l2(UN * AN.to_l2(v));
        Eigen::VectorXcd c = coefficients(su, sv) - coefficients(u, v);
        rows.push_back(c.real().transpose());
        rhs.push_back(0.0);
        rows.push_back(c.imag().transpose());
        rhs.push_back(0.0);
      }
    }
  }
  A_.resize(static_cast<int>(rows.size()), nparams_);
  b_.resize(static_cast<int>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    A_.row(i) = rows[i];
    b_(i) = rhs[i];
  }
}

void JoiningProblem::append_rows(const AffineCondition& c, std::vector<Eigen::RowVectorXd>& rows,
                                 std::vector<double>& rhs) const {
  Eigen::VectorXcd k = coefficients(c.x, c.y);
  rows.push_back(k.real().transpose());
  rhs.push_back(c.value.real());
  rows.push_back(k.imag().transpose());
  rhs.push_back(c.value.imag());
}

std::vector<Mat> JoiningProblem::ambient(const Element& x, const Element& y) const {
  const Algebra& AM = M_.algebra();
  const Algebra& AN = N_.algebra();
  AM.check(x);
  AN.check(y);
  std::vector<Mat> out;
  for (int i = 0; i < AM.num_blocks(); ++i)
    for (int j = 0; j < AN.num_blocks(); ++j) out.push_back(kron(x.block(i), y.block(j).transpose()));
  return out;
}

Eigen::VectorXcd JoiningProblem::coefficients(const Element& x, const Element& y) const {
  std::vector<Mat> X = ambient(x, y);
  Eigen::VectorXcd c(nparams_);
  const cd I(0, 1);
  for (std::size_t b = 0; b < X.size(); ++b) {
    const int s = sizes_[b];
    int k = poffset_[b];
    for (int a = 0; a < s; ++a) c(k++) = X[b](a, a);
    for (int a = 0; a < s; ++a)
      for (int e = a + 1; e < s; ++e) {
        c(k++) = (X[b](e, a) + X[b](a, e)) / kSqrt2;
        c(k++) = I * (X[b](e, a) - X[b](a, e)) / kSqrt2;
      }
  }
  return c;
}

std::vector<Mat> JoiningProblem::density(const RVec& r) const {
  std::vector<Mat> rho;
  const cd I(0, 1);
  for (std::size_t b = 0; b < sizes_.size(); ++b) {
    const int s = sizes_[b];
    Mat R(s, s);
    int k = poffset_[b];
    for (int a = 0; a < s; ++a) R(a, a) = r(k++);
    for (int a = 0; a < s; ++a)
      for (int e = a + 1; e < s; ++e) {
        R(a, e) = (r(k) + I * r(k + 1)) / kSqrt2;
        R(e, a) = std::conj(R(a, e));
        k += 2;
      }
    rho.push_back(std::move(R));
  }
  return rho;
}

RVec JoiningProblem::params(const std::vector<Mat>& rho) const {
  RVec r(nparams_);
  for (std::size_t b = 0; b < sizes_.size(); ++b) {
    const int s = sizes_[b];
    Mat H = 0.5 * (rho[b] + rho[b].adjoint());
    int k = poffset_[b];
    for (int a = 0; a < s; ++a) r(k++) = H(a, a).real();
    for (int a = 0; a < s; ++a)
      for (int e = a + 1; e < s; ++e) {
        r(k++) = kSqrt2 * H(a, e).real();
        r(k++) = kSqrt2 * H(a, e).imag();
      }
  }
  return r;
}

cd JoiningProblem::rel_indep_value(const Element& x, const Element& y) const {
  const Algebra& AM = M_.algebra();
  Element ex = cond_expect(M_.Q(), x);
  Element ey = AM.from_l2(M_.Q().basis_l2() * (id_.image.adjoint() * N_.algebra().to_l2(y)));
  return trace(AM, ex * ey);
}

JoiningProblem self_joining_problem(const DynamicalSystem& S) {
  return JoiningProblem(S, S, identity_identification(S.Q()));
}

JoiningState make_state(const JoiningProblem& J, const RVec& r) {
  JoiningState s;
  s.params = r;
  s.rho = J.density(r);
  s.min_eigenvalue = std::numeric_limits<double>::infinity();
  for (const auto& R : s.rho) s.min_eigenvalue = std::min(s.min_eigenvalue, hermitian_eig(R).values(0));
  s.constraint_residual = J.A().rows() ? (J.A() * r - J.b()).cwiseAbs().maxCoeff() : 0.0;
  return s;
}

cd evaluate(const JoiningProblem& J, const JoiningState& s, const Element& x, const Element& y) {
  return J.coefficients(x, y).cwiseProduct(s.params.cast<cd>()).sum();
}

JoiningState rel_indep_joining(const JoiningProblem& J) {
  const Algebra& AM = J.M().algebra();
  const Algebra& AN = J.N().algebra();
  std::vector<Mat> rho;
  for (int i = 0; i < AM.num_blocks(); ++i)
    for (int j = 0; j < AN.num_blocks(); ++j) {
      const int m = AM.blocks()[i], n = AN.blocks()[j];
      Mat R(m * n, m * n);
      // rho[(a',c'),(a,c)] = phi(e_{a a'} (x) e_{c' c})
      for (int a = 0; a < m; ++a)
        for (int a2 = 0; a2 < m; ++a2)
          for (int c = 0; c < n; ++c)
            for (int c2 = 0; c2 < n; ++c2)
              R(a2 * n + c2, a * n + c) = J.rel_indep_value(AM.matrix_unit(i, a, a2), AN.matrix_unit(j, c2, c));
      rho.push_back(std::move(R));
    }
  JoiningState s = make_state(J, J.params(rho));
  const auto& tol = AM.tol();
  if (s.constraint_residual > tol.verify * 10 || s.min_eigenvalue < -tol.verify * 10) {
    std::ostringstream os;
    os << "relatively independent joining fails its constraints (residual " << s.constraint_residual
       << ", min eigenvalue " << s.min_eigenvalue << ")";
    fail(ErrorKind::NumericalFailure, os.str());
  }
  return s;
}

namespace {

RVec psd_project(const JoiningProblem& J, const RVec& r) {
  std::vector<Mat> rho = J.density(r);
  for (auto& R : rho) {
    HermEig e = hermitian_eig(R);
    Eigen::VectorXd v = e.values.cwiseMax(0.0);
    R = e.vectors * v.cast<cd>().asDiagonal() * e.vectors.adjoint();
  }
  return J.params(rho);
}

}  // namespace

FeasibilityResult joining_feasible(const JoiningProblem& J, const std::vector<AffineCondition>& extra, int max_iter) {
  const auto& tol = J.M().algebra().tol();
  if (max_iter < 1) fail(ErrorKind::InvalidArgument, "max_iter must be positive");
  std::vector<Eigen::RowVectorXd> rows;
  std::vector<double> rhs;
  for (const auto& c : extra) J.append_rows(c, rows, rhs);
  RMat A(J.A().rows() + static_cast<int>(rows.size()), J.num_params());
  RVec b(A.rows());
  A.topRows(J.A().rows()) = J.A();
  b.head(J.b().size()) = J.b();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    A.row(J.A().rows() + i) = rows[i];
    b(J.b().size() + i) = rhs[i];
  }

  FeasibilityResult out;
  AffineSet aff = affine_set(A, b, tol);
  JoiningState start = rel_indep_joining(J);
  if (aff.inconsistency > tol.report) {
    std::ostringstream os;
    os << "affine constraints are inconsistent (least-squares residual " << aff.inconsistency << ")";
    out.reason = os.str();
    out.state = start;
    out.residual_history.push_back(aff.inconsistency);
    return out;
  }

  auto residual = [&](const RVec& r) { return (A * r - b).cwiseAbs().maxCoeff(); };
  RVec x = start.params, p = RVec::Zero(x.size()), q = RVec::Zero(x.size());
  double last_check = residual(x);
  out.residual_history.push_back(last_check);
  if (last_check <= tol.report) {
    out.feasible = true;
    out.state = start;
    return out;
  }
  for (int it = 1; it <= max_iter; ++it) {
    RVec y = aff.project(x + p);
    p = x + p - y;
    RVec z = psd_project(J, y + q);
    q = y + q - z;
    x = z;
    double res = residual(x);
    out.iterations = it;
    if (it <= 10 || it % 1000 == 0) out.residual_history.push_back(res);
    if (res <= tol.report) {
      out.feasible = true;
      out.state = make_state(J, x);
      out.residual_history.push_back(res);
      return out;
    }
    // a positive gap that no longer moves means the two sets do not meet
    if (it % 1000 == 0) {
      if (std::abs(last_check - res) <= 1e-13 * std::max(1.0, res) && res > tol.report) {
        std::ostringstream os;
        os << "alternating projections stalled at distance " << res;
        out.reason = os.str();
        out.state = make_state(J, x);
        return out;
      }
      last_check = res;
    }
  }
  std::ostringstream os;
  os << "no feasible state after " << max_iter << " iterations";
  out.reason = os.str();
  out.state = make_state(J, x);
  return out;
}

ProbeResult disjointness_probe(const JoiningProblem& J, const TestObservable& T) {
  const auto& tol = J.M().algebra().tol();
  const int n = J.num_params();
  RVec obj = RVec::Zero(n);
  for (const auto& [x, y] : T) obj += J.coefficients(x, y).real();
  // T self-adjoint: Re phi(T) is then phi(T); only the real part is optimized either way

  JoiningState r0 = rel_indep_joining(J);
  ProbeResult out;
  out.rel_indep_value = obj.dot(r0.params);
  AffineSet aff = affine_set(J.A(), J.b(), tol);

  // restrict to the face of the cone containing rho_0
  std::vector<Mat> rho0 = r0.rho;
  double maxe = 0;
  std::vector<HermEig> eig0;
  for (const auto& R : rho0) {
    eig0.push_back(hermitian_eig(R));
    maxe = std::max(maxe, eig0.back().values.cwiseAbs().maxCoeff());
  }
  double cut = rank_cutoff(maxe, tol);
  std::vector<Mat> V, Vperp;
  for (const auto& e : eig0) {
    int s = static_cast<int>(e.values.size()), k = 0;
    while (k < s && e.values(s - 1 - k) > cut) ++k;
    V.push_back(e.vectors.rightCols(k));
    Vperp.push_back(e.vectors.leftCols(s - k));
  }
  const int k0 = static_cast<int>(aff.null.cols());
  int rows = 0;
  for (std::size_t b = 0; b < V.size(); ++b) rows += 2 * static_cast<int>(Vperp[b].cols() * rho0[b].rows());
  RMat face(rows, k0);
  for (int l = 0; l < k0; ++l) {
    std::vector<Mat> D = J.density(aff.null.col(l));
    int off = 0;
    for (std::size_t b = 0; b < V.size(); ++b) {
      Mat W = Vperp[b].adjoint() * D[b];
      for (int i = 0; i < W.size(); ++i) {
        face(off++, l) = W(i).real();
        face(off++, l) = W(i).imag();
      }
    }
  }
  RMat Bf;
  if (k0 == 0) {
    Bf.resize(n, 0);
  } else if (rows == 0) {
    Bf = aff.null;
  } else {
    Eigen::BDCSVD<RMat> svd(face, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    double c = std::max(tol.rank_rel * (sv.size() ? sv(0) : 0.0), tol.rank_abs);
    int rank = 0;
    while (rank < sv.size() && sv(rank) > c) ++rank;
    Bf = aff.null * svd.matrixV().rightCols(k0 - rank);
  }
  const int k = static_cast<int>(Bf.cols());
  out.free_dims = k;
  if (k == 0) {
    out.max_value = out.rel_indep_value;
    out.optimizer = r0;
    return out;
  }

  // compressed blocks R_b(t) = V^* rho0 V + sum_l t_l V^* D_l V
  std::vector<Mat> R0;
  std::vector<std::vector<Mat>> Dc(V.size());
  int mtot = 0;
  for (std::size_t b = 0; b < V.size(); ++b) {
    R0.push_back(V[b].adjoint() * rho0[b] * V[b]);
    mtot += static_cast<int>(V[b].cols());
  }
  for (int l = 0; l < k; ++l) {
    std::vector<Mat> D = J.density(Bf.col(l));
    for (std::size_t b = 0; b < V.size(); ++b) Dc[b].push_back(V[b].adjoint() * D[b] * V[b]);
  }
  RVec c = Bf.transpose() * obj;

  auto blocks_at = [&](const RVec& t) {
    std::vector<Mat> R = R0;
    for (std::size_t b = 0; b < V.size(); ++b)
      for (int l = 0; l < k; ++l) R[b] += t(l) * Dc[b][l];
    return R;
  };
  // log det, or nullopt when not positive definite
  auto logdet = [&](const std::vector<Mat>& R, bool& ok) {
    double s = 0;
    ok = true;
    for (const auto& X : R) {
      if (X.rows() == 0) continue;
      Eigen::LLT<Mat> llt(0.5 * (X + X.adjoint()));
      if (llt.info() != Eigen::Success) {
        ok = false;
        return 0.0;
      }
      for (int i = 0; i < X.rows(); ++i) {
        double d = llt.matrixLLT()(i, i).real();
        if (!(d > 0)) {
          ok = false;
          return 0.0;
        }
        s += 2 * std::log(d);
      }
    }
    return s;
  };

  RVec t = RVec::Zero(k);
  double mu = 1.0;
  int steps = 0;
  while (mu * mtot > 1e-10) {
    for (int inner = 0; inner < 20; ++inner) {
      std::vector<Mat> R = blocks_at(t);
      RVec grad = c;
      RMat H = RMat::Zero(k, k);
      for (std::size_t b = 0; b < V.size(); ++b) {
        const int s = static_cast<int>(R[b].rows());
        if (s == 0) continue;
        Mat Rinv = R[b].inverse();
        Mat Y(s * s, k), Yt(s * s, k);
        for (int l = 0; l < k; ++l) {
          Mat Yl = Rinv * Dc[b][l];
          grad(l) += mu * Yl.trace().real();
          Y.col(l) = Eigen::Map<const Vec>(Yl.data(), s * s);
          Mat YlT = Yl.transpose();
          Yt.col(l) = Eigen::Map<const Vec>(YlT.data(), s * s);
        }
        // tr(Y_l Y_m) = sum_ij Y_l(i,j) Y_m(j,i)
        H -= mu * (Yt.transpose() * Y).real();
      }
      Eigen::LLT<RMat> llt(-H);
      if (llt.info() != Eigen::Success) fail(ErrorKind::NumericalFailure, "barrier Hessian is not definite");
      RVec dir = llt.solve(grad);
      double dec = grad.dot(dir);
      ++steps;
      if (steps > 20000) fail(ErrorKind::IterationLimit, "barrier method exceeded its step budget");
      if (dec < 1e-14) break;
      bool ok0;
      double f0 = c.dot(t) + mu * logdet(R, ok0);
      double step = 1.0;
      bool moved = false;
      for (int ls = 0; ls < 60; ++ls) {
        RVec tn = t + step * dir;
        bool ok;
        double ld = logdet(blocks_at(tn), ok);
        if (ok && c.dot(tn) + mu * ld >= f0 + 0.25 * step * dec) {
          t = tn;
          moved = true;
          break;
        }
        step *= 0.5;
      }
      if (!moved) break;
    }
    mu *= 0.2;
  }
  out.newton_steps = steps;
  RVec r = r0.params + Bf * t;
  out.optimizer = make_state(J, r);
  out.max_value = obj.dot(r);
  out.non_disjoint = out.max_value - out.rel_indep_value > 10 * tol.report;
  return out;
}

CPMap cp_from_joining(const JoiningProblem& J, const JoiningState& s) {
  const Algebra& AM = J.M().algebra();
  const Algebra& AN = J.N().algebra();
  const auto& tol = AM.tol();
  const int dM = AM.dim(), dN = AN.dim();
  CPMap out;
  out.l2.resize(dN, dM);
  std::vector<Element> uN(dN);
  for (int j = 0; j < dN; ++j) uN[j] = AN.basis(j);
  // tau_N(Phi(x) y) = phi(x (x) y):  vec(Phi(x)^*)_j = conj(phi(x (x) u_j))
  for (int k = 0; k < dM; ++k) {
    Element x = AM.basis(k);
    Vec zstar(dN);
    for (int j = 0; j < dN; ++j) zstar(j) = std::conj(evaluate(J, s, x, uN[j]));
    out.l2.col(k) = AN.star_l2(zstar);
  }
  out.unital_residual = (out.l2 * AM.to_l2(AM.identity()) - AN.to_l2(AN.identity())).norm();
  out.q_residual = containment_residual(out.l2 * J.M().Q().basis_l2() - J.identification().image, Mat(dN, 0));
  out.choi_min = std::numeric_limits<double>::infinity();
  for (int i = 0; i < AM.num_blocks(); ++i) {
    const int m = AM.blocks()[i];
    std::vector<Element> img(m * m);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) img[a * m + b] = out.apply(AM, AN, AM.matrix_unit(i, a, b));
    for (int j = 0; j < AN.num_blocks(); ++j) {
      const int n = AN.blocks()[j];
      Mat C(m * n, m * n);
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) C.block(a * n, b * n, n, n) = img[a * m + b].block(j);
      out.choi_min = std::min(out.choi_min, hermitian_eig(0.5 * (C + C.adjoint())).values(0));
    }
  }
  for (std::size_t g = 0; g < J.M().koopman().size(); ++g) {
    Mat r = out.l2 * J.M().koopman()[g] - J.N().koopman()[g] * out.l2;
    out.intertwining_residual = std::max(out.intertwining_residual, r.cwiseAbs().maxCoeff());
  }
  if (out.choi_min < -tol.report) {
    std::ostringstream os;
    os << "Choi matrix has eigenvalue " << out.choi_min;
    fail(ErrorKind::CPViolation, os.str());
  }
  return out;
}

GNSComparison compare_gns_with_fusion(const JoiningProblem& J, const JoiningState& s) {
  const Algebra& AM = J.M().algebra();
  const Algebra& AN = J.N().algebra();
  const int dM = AM.dim(), dN = AN.dim();
  FusionSpace F = build_fusion(J.M().Q(), J.N().Q(), J.identification());
  std::vector<Element> x(dM), y(dN);
  for (int i = 0; i < dM; ++i) x[i] = AM.basis(i);
  for (int j = 0; j < dN; ++j) y[j] = AN.basis(j);
  // <x_i (x) y_j, x_k (x) y_l> = phi(x_i^* x_k (x) y_l y_j^*) in M (x) N^op
  Mat G(dM * dN, dM * dN);
  for (int i = 0; i < dM; ++i)
    for (int k = 0; k < dM; ++k) {
      Element xx = x[i].adjoint() * x[k];
      for (int j = 0; j < dN; ++j)
        for (int l = 0; l < dN; ++l) G(i * dN + j, k * dN + l) = evaluate(J, s, xx, y[l] * y[j].adjoint());
    }
  GNSComparison out;
  out.gram_rank = gram_frame(G, AM.tol()).dim;
  out.fusion_dim = F.dim();
  out.max_inner_residual = (G - F.gram()).cwiseAbs().maxCoeff();
  return out;
}

RelativeProduct rel_product_central(const Subalgebra& Q1, const Subalgebra& Q2, const Identification& id) {
  const Algebra& A1 = Q1.parent();
  const Algebra& A2 = Q2.parent();
  const auto& tol = A1.tol();
  for (const auto& q : Q1.basis())
    if ((A1.left_mult(q) - A1.right_mult(q)).cwiseAbs().maxCoeff() > tol.verify * 100)
      fail(ErrorKind::NotCentral, "Q is not central in the first algebra");
  for (const auto& q : Q2.basis())
    if ((A2.left_mult(q) - A2.right_mult(q)).cwiseAbs().maxCoeff() > tol.verify * 100)
      fail(ErrorKind::NotCentral, "Q is not central in the second algebra");

  FusionSpace F = build_fusion(Q1, Q2, id);
  std::vector<Mat> L, R;
  for (int i = 0; i < A1.dim(); ++i) L.push_back(F.left_action(A1.basis(i)));
  for (int j = 0; j < A2.dim(); ++j) R.push_back(F.right_action(A2.basis(j)));
  // the two actions commute, so products span the generated algebra
  std::vector<Mat> ops;
  for (const auto& l : L)
    for (const auto& r : R) ops.push_back(l * r);
  Vec omega = F.iota1() * A1.to_l2(A1.identity());
  StarDecomposition dec = decompose_star_algebra(ops, omega, tol);

  const Algebra& P = dec.algebra;
  Mat W(F.dim(), P.dim());
  for (int m = 0; m < P.dim(); ++m) W.col(m) = dec.to_operator(P.basis(m)) * omega;
  if ((W.adjoint() * W - Mat::Identity(P.dim(), P.dim())).cwiseAbs().maxCoeff() > tol.verify * 1e3 ||
      W.cols() != W.rows())
    fail(ErrorKind::NumericalFailure, "relative product is not cyclic for the unit vector");

  RelativeProduct out{F, dec, W, Subalgebra(), 0, 0, 0};
  std::vector<Element> i1(A1.dim()), i2(A2.dim());
  for (int i = 0; i < A1.dim(); ++i) i1[i] = dec.to_algebra(L[i]);
  for (int j = 0; j < A2.dim(); ++j) i2[j] = dec.to_algebra(R[j]);
  for (int i = 0; i < A1.dim(); ++i) {
    out.trace_residual = std::max(out.trace_residual, std::abs(trace(P, i1[i]) - trace(A1, A1.basis(i))));
    for (int k = 0; k < A1.dim(); ++k) {
      Element lhs = out.iota1(A1.basis(i) * A1.basis(k));
      out.hom_residual = std::max(out.hom_residual, (lhs - i1[i] * i1[k]).max_abs());
    }
  }
  for (int j = 0; j < A2.dim(); ++j) {
    out.trace_residual = std::max(out.trace_residual, std::abs(trace(P, i2[j]) - trace(A2, A2.basis(j))));
    for (int l = 0; l < A2.dim(); ++l) {
      Element lhs = out.iota2(A2.basis(j) * A2.basis(l));
      out.hom_residual = std::max(out.hom_residual, (lhs - i2[l] * i2[j]).max_abs());
    }
  }
  std::vector<Element> q1 = Q1.basis();
  Mat qimg(P.dim(), q1.size());
  for (std::size_t m = 0; m < q1.size(); ++m) {
    Element a = out.iota1(q1[m]);
    Element b = out.iota2(A2.from_l2(id.image.col(m)));
    out.agree_residual = std::max(out.agree_residual, (a - b).max_abs());
    qimg.col(m) = P.to_l2(a);
  }
  double worst = std::max({out.trace_residual, out.hom_residual, out.agree_residual});
  if (worst > tol.report) {
    std::ostringstream os;
    os << "embeddings into the relative product fail verification (" << worst << ")";
    fail(ErrorKind::NumericalFailure, os.str());
  }
  out.Q_in_P = subalgebra_from_span(P, qimg);
  return out;
}

DynamicalSystem product_system(const DynamicalSystem& S1, const DynamicalSystem& S2, const RelativeProduct& P) {
  if (!same_group(S1.group(), S2.group())) fail(ErrorKind::InvalidArgument, "systems carry different groups");
  std::vector<Mat> Ud = diagonal_action(S1.koopman(), S2.koopman(), P.F);
  std::vector<Mat> maps;
  for (const auto& U : Ud) maps.push_back(P.l2_to_fusion.adjoint() * U * P.l2_to_fusion);
  return make_system(P.algebra(), S1.group(), maps, P.Q_in_P);
}

TheoremBReport theoremB_check(const DynamicalSystem& S1, const DynamicalSystem& S2, const Identification& id) {
  const auto& tol = S1.algebra().tol();
  RelativeProduct RP = rel_product_central(S1.Q(), S2.Q(), id);
  DynamicalSystem SP = product_system(S1, S2, RP);
  APDecomposition a1 = ap_decompose(S1), a2 = ap_decompose(S2), aP = ap_decompose(SP);
  TheoremBReport rep;
  rep.dim1 = S1.dim();
  rep.dim2 = S2.dim();
  rep.dimP = SP.dim();
  rep.ap1 = static_cast<int>(a1.ap_basis.cols());
  rep.ap2 = static_cast<int>(a2.ap_basis.cols());
  rep.apP = static_cast<int>(aP.ap_basis.cols());

  const Algebra& A1 = S1.algebra();
  const Algebra& A2 = S2.algebra();
  const Mat Wt = RP.l2_to_fusion.adjoint();
  auto tensor_span = [&](const Mat& X, const Mat& Y) {
    Mat cols(SP.dim(), X.cols() * Y.cols());
    for (int i = 0; i < X.cols(); ++i)
      for (int j = 0; j < Y.cols(); ++j)
        cols.col(i * Y.cols() + j) = Wt * embed(RP.F, A1.from_l2(X.col(i)), A2.from_l2(Y.col(j)));
    return orth(cols, tol);
  };
  Mat T = tensor_span(a1.ap_basis, a2.ap_basis);
  rep.tensor_rank = static_cast<int>(T.cols());
  rep.subspace_residual = std::max(containment_residual(T, aP.ap_basis), containment_residual(aP.ap_basis, T));

  CompactnessReport c1 = is_compact_extension(S1, a1), c2 = is_compact_extension(S2, a2);
  Mat all(SP.dim(), 0);
  for (const auto& m1 : c1.modules)
    for (const auto& m2 : c2.modules) {
      Mat W = tensor_span(m1.basis, m2.basis);
      ++rep.witness_pairs;
      for (const auto& U : SP.koopman())
        rep.witness_residual = std::max(rep.witness_residual, containment_residual(U * W, W));
      rep.witness_residual = std::max(rep.witness_residual, right_invariance_residual(SP.Q(), W));
      rep.witness_residual = std::max(rep.witness_residual, containment_residual(W, aP.ap_basis));
      Mat next(SP.dim(), all.cols() + W.cols());
      next << all, W;
      all = next;
    }
  rep.witness_rank = static_cast<int>(orth(all, tol).cols());
  rep.passed = rep.ap1 == rep.dim1 && rep.ap2 == rep.dim2 && rep.apP == rep.dimP && rep.tensor_rank == rep.apP &&
               rep.subspace_residual <= tol.report && rep.witness_rank == rep.dimP &&
               rep.witness_residual <= tol.report;
  return rep;
}

}  // namespace opalg
