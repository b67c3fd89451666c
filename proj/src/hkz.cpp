#include "opalg/hkz.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>

#include "opalg/kernels.hpp"
#include "opalg/linalg.hpp"

namespace opalg {

namespace {

[[noreturn]] void fail(ErrorKind k, const std::string& msg) { throw Error(k, msg); }

GroupWord generator_word(int g) { return GroupWord{{g + 1}}; }

double traciality_residual(const CubicLevel& L, int d) {
  std::mt19937_64 rng(0x7AC1ULL + L.k);
  double worst = 0;
  for (int trial = 0; trial < 4; ++trial) {
    std::vector<Vec> a(L.vertices()), b(L.vertices());
    for (int e = 0; e < L.vertices(); ++e) {
      a[e] = random_vector(d, rng).normalized();
      b[e] = random_vector(d, rng).normalized();
    }
    auto apply = [&](const std::vector<Vec>& xs, Vec v) {
      for (int e = 0; e < L.vertices(); ++e) v = L.op_at(e, xs[e]) * v;
      return v;
    };
    cd ab = L.omega.dot(apply(a, apply(b, L.omega)));
    cd ba = L.omega.dot(apply(b, apply(a, L.omega)));
    worst = std::max(worst, std::abs(ab - ba));
  }
  return worst;
}

// Face transformation on level k+1 from its restrictions to the two halves, given in
// level-k coordinates (A acts on the first half, B on the second; null means identity).
// Uses pi_{k+1}(a (x) b) Omega_{k+1} = W kron(Vinv pi_k(a) Omega_k, Vinv pi_k(b) Omega_k).
Mat lifted_face(const CubicLevel& prev, const Mat& W, const std::vector<long>& pivots, const Mat& spanning_vectors,
                const Mat* A, const Mat* B) {
  const int r = prev.dim;
  const int R = static_cast<int>(W.rows());
  Mat At, Bt;
  if (A) At = prev.spanning_inverse * *A * prev.spanning_vectors;
  if (B) Bt = prev.spanning_inverse * *B * prev.spanning_vectors;
  Mat cols(R, static_cast<int>(pivots.size()));
  if (!A) {
    for (std::size_t c = 0; c < pivots.size(); ++c) {
      long s = pivots[c] / r, t = pivots[c] % r;
      cols.col(c) = B ? Vec(W.middleCols(s * r, r) * Bt.col(t)) : Vec(W.col(pivots[c]));
    }
  } else {
    // Zt[t] column s' = (W_{s'} B)(:, t)
    std::vector<Mat> Zt(r, Mat(R, r));
    for (int s2 = 0; s2 < r; ++s2) {
      Mat Z = B ? Mat(W.middleCols(static_cast<long>(s2) * r, r) * Bt) : Mat(W.middleCols(static_cast<long>(s2) * r, r));
      for (int t = 0; t < r; ++t) Zt[t].col(s2) = Z.col(t);
    }
    for (std::size_t c = 0; c < pivots.size(); ++c) {
      long s = pivots[c] / r, t = pivots[c] % r;
      cols.col(c) = Zt[t] * At.col(s);
    }
  }
  spanning_vectors.triangularView<Eigen::Upper>().solveInPlace<Eigen::OnTheRight>(cols);
  return cols;
}

struct LiftData {
  const CubicLevel* prev;
  const Mat* W;
  const std::vector<long>* pivots;
};

void fill_sides(CubicLevel& L, const DynamicalSystem& S, const LiftData* lift = nullptr) {
  const auto& tol = S.algebra().tol();
  const int ng = S.group().num_generators();
  auto transform = [&](int g, const Face& f, int j, int eta) -> Mat {
    if (!lift) return face_transformation(L, S, generator_word(g), f);
    const CubicLevel& P = *lift->prev;
    const Mat* D = &P.diagonal_unitaries[g];
    const Mat *A = D, *B = D;
    if (j == L.k) {
      A = eta == 0 ? D : nullptr;
      B = eta == 1 ? D : nullptr;
    } else if (j > 0) {
      const Mat* side_prev = &P.side_unitaries[((j - 1) * 2 + eta) * ng + g];
      A = B = side_prev;
    }
    return lifted_face(P, *lift->W, *lift->pivots, L.spanning_vectors, A, B);
  };
  for (int g = 0; g < ng; ++g) L.diagonal_unitaries.push_back(transform(g, full_face(), 0, 0));
  L.P_inv = invariant_subspace(L.diagonal_unitaries, L.dim, tol);
  for (int j = 1; j <= L.k; ++j)
    for (int eta = 0; eta <= 1; ++eta)
      for (int g = 0; g < ng; ++g) {
        Mat U = transform(g, side(j, eta), j, eta);
        L.side_unitarity_residual = std::max(
            L.side_unitarity_residual, (U.adjoint() * U - Mat::Identity(L.dim, L.dim)).cwiseAbs().maxCoeff());
        L.side_state_residual = std::max(L.side_state_residual, (U * L.omega - L.omega).norm());
        L.side_unitaries.push_back(std::move(U));
        L.side_labels.push_back("side " + std::to_string(j) + "=" + std::to_string(eta) + " by " +
                                S.group().labels[g]);
      }
  if (L.side_unitarity_residual > tol.report || L.side_state_residual > tol.report) {
    std::ostringstream os;
    os << "side transformations at level " << L.k << " are not state-preserving unitaries ("
       << std::max(L.side_unitarity_residual, L.side_state_residual) << ")";
    fail(ErrorKind::NumericalFailure, os.str());
  }
  L.traciality_residual = traciality_residual(L, S.dim());
}

}  // namespace

int cube_weight(int eps) { return __builtin_popcount(static_cast<unsigned>(eps)); }

void Face::validate(int k) const {
  if (J.size() != eta.size()) fail(ErrorKind::Face, "face needs one bit per fixed coordinate");
  std::vector<int> seen(k + 1, 0);
  for (std::size_t i = 0; i < J.size(); ++i) {
    if (J[i] < 1 || J[i] > k) fail(ErrorKind::Face, "face coordinate out of range");
    if (seen[J[i]]++) fail(ErrorKind::Face, "face coordinate repeated");
    if (eta[i] != 0 && eta[i] != 1) fail(ErrorKind::Face, "face bits must be 0 or 1");
  }
}

bool Face::contains(int eps) const {
  for (std::size_t i = 0; i < J.size(); ++i)
    if (((eps >> (J[i] - 1)) & 1) != eta[i]) return false;
  return true;
}

Face full_face() { return Face{}; }
Face side(int j, int eta) { return Face{{j}, {eta}}; }

Mat CubicLevel::op_at(int eps, const Vec& x) const {
  const auto& ops = gen_ops[eps];
  Mat out = Mat::Zero(dim, dim);
  for (int i = 0; i < x.size(); ++i)
    if (x(i) != cd(0)) out += x(i) * ops[i];
  return out;
}

Mat CubicLevel::op_of(const std::vector<Vec>& xs) const {
  Mat out = op_at(0, xs[0]);
  for (int e = 1; e < vertices(); ++e) out = out * op_at(e, xs[e]);
  return out;
}

long default_budget() {
  if (const char* env = std::getenv("OPALG_BUDGET")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end && *end == '\0' && v > 0) return v;
    fail(ErrorKind::InvalidArgument, "OPALG_BUDGET must be a positive integer");
  }
  return 262144;
}

CubicLevel build_level0(const DynamicalSystem& S) {
  if (!S.group().is_abelian()) fail(ErrorKind::NotAbelian, "cubic systems need an abelian group");
  if (!S.ergodic()) fail(ErrorKind::NotErgodic, "cubic systems need an ergodic action");
  const Algebra& A = S.algebra();
  const int d = A.dim();
  CubicLevel L;
  L.k = 0;
  L.dim = d;
  L.omega = A.to_l2(A.identity());
  L.gen_ops.resize(1);
  for (int i = 0; i < d; ++i) {
    L.gen_ops[0].push_back(A.left_mult(A.basis(i)));
    L.spanning.push_back({i});
  }
  L.spanning_vectors = Mat::Identity(d, d);
  L.spanning_inverse = Mat::Identity(d, d);
  fill_sides(L, S);
  return L;
}

Mat face_transformation(const CubicLevel& L, const DynamicalSystem& S, const GroupWord& w, const Face& face) {
  face.validate(L.k);
  const int d = S.dim();
  Mat U = S.koopman_of(w);
  std::vector<std::vector<Mat>> moved(L.vertices());
  for (int e = 0; e < L.vertices(); ++e) {
    if (!face.contains(e)) continue;
    // sigma(u_i) = sum_j U(j,i) u_j
    for (int i = 0; i < d; ++i) moved[e].push_back(L.op_at(e, U.col(i)));
  }
  Mat cols(L.dim, L.dim);
  for (int s = 0; s < L.dim; ++s) {
    Vec v = L.omega;
    for (int e = L.vertices() - 1; e >= 0; --e) {
      int i = L.spanning[s][e];
      v = face.contains(e) ? Vec(moved[e][i] * v) : Vec(L.gen_ops[e][i] * v);
    }
    cols.col(s) = v;
  }
  return cols * L.spanning_inverse;
}

CubicLevel lift_level(const CubicLevel& L, const DynamicalSystem& S, long budget, bool parallel) {
  const auto& tol = S.algebra().tol();
  const int r = L.dim;
  const long N = static_cast<long>(r) * r;
  if (N > 100 * budget) {
    std::ostringstream os;
    os << "level " << L.k + 1 << " needs " << N << " candidate pairs, budget " << budget;
    fail(ErrorKind::BudgetExceeded, os.str());
  }
  const int d = S.dim();

  std::vector<Mat> ops(r);
  for (int s = 0; s < r; ++s) {
    Mat op = L.gen_ops[0][L.spanning[s][0]];
    for (int e = 1; e < L.vertices(); ++e) op = op * L.gen_ops[e][L.spanning[s][e]];
    ops[s] = std::move(op);
  }
  std::vector<Mat> X = parallel ? kernels::projected_pairs_parallel(ops, L.spanning_vectors, L.P_inv)
                                : kernels::projected_pairs_serial(ops, L.spanning_vectors, L.P_inv);
  const int p = static_cast<int>(L.P_inv.cols());
  std::vector<Mat> Y(r, Mat(p, r));
  for (int t2 = 0; t2 < r; ++t2)
    for (int t = 0; t < r; ++t) Y[t2].col(t) = X[t].col(t2);

  // G[(s,t),(s',t')] = < X[s'](:,s), X[t](:,t') >
  auto column = [&](long q) {
    int s2 = static_cast<int>(q / r), t2 = static_cast<int>(q % r);
    Mat CT = (X[s2].adjoint() * Y[t2]).transpose();
    return Vec(Eigen::Map<const Vec>(CT.data(), N));
  };
  Eigen::VectorXd diag(N);
  double max_imag = 0;
  for (int s = 0; s < r; ++s)
    for (int t = 0; t < r; ++t) {
      cd v = X[s].col(s).dot(X[t].col(t));
      diag(static_cast<long>(s) * r + t) = v.real();
      max_imag = std::max(max_imag, std::abs(v.imag()));
    }
  const double scale = std::max(1.0, diag.cwiseAbs().maxCoeff());
  if (max_imag > tol.verify * scale) fail(ErrorKind::PositivityViolation, "cube form has complex diagonal");
  if (diag.minCoeff() < -tol.verify * scale) fail(ErrorKind::PositivityViolation, "cube form has a negative diagonal");

  // pivoted Cholesky of G
  const double cut = rank_cutoff(diag.maxCoeff(), tol);
  std::vector<long> pivots;
  std::vector<Vec> Lc;
  Eigen::VectorXd rem = diag;
  while (true) {
    long j;
    double best = rem.maxCoeff(&j);
    if (best <= cut) break;
    long R = static_cast<long>(pivots.size()) + 1;
    if (R * R > budget) {
      std::ostringstream os;
      os << "level " << L.k + 1 << " frame exceeds budget " << budget << " (dimension > " << R - 1 << ")";
      fail(ErrorKind::BudgetExceeded, os.str());
    }
    Vec g = column(j);
    for (const auto& l : Lc) g -= l * std::conj(l(j));
    Vec nl = g / std::sqrt(best);
    for (long pv : pivots) nl(pv) = 0;  // exact in exact arithmetic; keeps the pivot block triangular
    for (long q = 0; q < N; ++q) rem(q) -= std::norm(nl(q));
    rem(j) = 0;
    for (long pv : pivots) rem(pv) = 0;
    Lc.push_back(std::move(nl));
    pivots.push_back(j);
  }
  if (rem.minCoeff() < -tol.verify * scale * 100) {
    std::ostringstream os;
    os << "cube form is not positive at level " << L.k + 1 << " (" << rem.minCoeff() << ")";
    fail(ErrorKind::PositivityViolation, os.str());
  }
  const int R = static_cast<int>(pivots.size());
  Mat Lm(N, R);
  for (int c = 0; c < R; ++c) Lm.col(c) = Lc[c];

  // spot-check hermitian symmetry and the factorization
  {
    std::vector<long> sample;
    for (int c = 0; c < std::min(R, 4); ++c) sample.push_back(pivots[c]);
    long stride = std::max<long>(1, N / 12);
    for (long q = 0; q < N; q += stride) sample.push_back(q);
    double worst = 0;
    std::vector<Vec> cols;
    for (long q : sample) {
      cols.push_back(column(q));
      Vec approx = Lm * Lm.row(q).adjoint();
      worst = std::max(worst, (cols.back() - approx).cwiseAbs().maxCoeff());
    }
    for (std::size_t a = 0; a < sample.size(); ++a)
      for (std::size_t b = 0; b < sample.size(); ++b)
        worst = std::max(worst, std::abs(cols[b](sample[a]) - std::conj(cols[a](sample[b]))));
    if (worst > tol.verify * 1e3 * scale) {
      std::ostringstream os;
      os << "cube form is not a hermitian positive form at level " << L.k + 1 << " (" << worst << ")";
      fail(ErrorKind::PositivityViolation, os.str());
    }
  }

  CubicLevel out;
  out.k = L.k + 1;
  out.dim = R;
  Mat W = Lm.adjoint();  // class of pair q is W.col(q)
  out.spanning_vectors.resize(R, R);
  for (int c = 0; c < R; ++c) {
    out.spanning_vectors.col(c) = W.col(pivots[c]);
    int s = static_cast<int>(pivots[c] / r), t = static_cast<int>(pivots[c] % r);
    std::vector<int> idx = L.spanning[s];
    idx.insert(idx.end(), L.spanning[t].begin(), L.spanning[t].end());
    out.spanning.push_back(std::move(idx));
  }
  // W(:, pivots) is upper triangular
  out.spanning_inverse = Mat::Identity(R, R);
  out.spanning_vectors.triangularView<Eigen::Upper>().solveInPlace(out.spanning_inverse);
  Vec c = L.spanning_inverse * L.omega;
  out.omega = W * kron(c, c);

  std::vector<Mat> Wt(r, Mat(R, r));
  for (int t = 0; t < r; ++t)
    for (int s = 0; s < r; ++s) Wt[t].col(s) = W.col(static_cast<long>(s) * r + t);
  std::vector<long> check;
  long stride = std::max<long>(1, N / 48);
  for (long q = 0; q < N; q += stride) check.push_back(q);
  const int half = L.vertices();
  std::vector<Mat> At(2 * half * d), lifted(2 * half * d);
  auto image = [&](int op, long q) -> Vec {
    int s = static_cast<int>(q / r), t = static_cast<int>(q % r);
    return op / d < half ? Vec(Wt[t] * At[op].col(s)) : Vec(W.middleCols(static_cast<long>(s) * r, r) * At[op].col(t));
  };
  for (int op = 0; op < 2 * half * d; ++op) {
    At[op] = L.spanning_inverse * L.gen_ops[(op / d) % half][op % d] * L.spanning_vectors;
    lifted[op].resize(R, R);
    for (int j = 0; j < R; ++j) lifted[op].col(j) = image(op, pivots[j]);
  }
  if (parallel) kernels::solve_upper_right_parallel(lifted, out.spanning_vectors);
  else kernels::solve_upper_right_serial(lifted, out.spanning_vectors);
  out.gen_ops.assign(2 * half, {});
  for (int op = 0; op < 2 * half * d; ++op) {
    for (long q : check)
      out.definition_residual =
          std::max(out.definition_residual, (image(op, q) - lifted[op] * W.col(q)).cwiseAbs().maxCoeff());
    out.gen_ops[op / d].push_back(std::move(lifted[op]));
  }
  if (out.definition_residual > tol.report * std::max(1.0, scale)) {
    std::ostringstream os;
    os << "lifted operators are not well defined at level " << out.k << " (" << out.definition_residual << ")";
    fail(ErrorKind::NumericalFailure, os.str());
  }
  LiftData ld{&L, &W, &pivots};
  fill_sides(out, S, &ld);
  return out;
}

InvariantCubes invariant_cubes(const CubicLevel& L, const DynamicalSystem& S) {
  const auto& tol = S.algebra().tol();
  InvariantCubes out;
  out.I_basis = L.P_inv;
  // sides not containing 0: eps_j = 1
  std::vector<Mat> star;
  for (int j = 1; j <= L.k; ++j)
    for (int g = 0; g < S.group().num_generators(); ++g)
      star.push_back(face_transformation(L, S, generator_word(g), side(j, 1)));
  out.J_basis = invariant_subspace(star, L.dim, tol);
  Mat zero(L.dim, S.dim());
  for (int i = 0; i < S.dim(); ++i) zero.col(i) = L.gen_ops[0][i] * L.omega;
  out.zerocoord_residual = containment_residual(out.J_basis, orth(zero, tol));
  return out;
}

CubicTower::CubicTower(DynamicalSystem S, long budget, bool parallel)
    : S_(std::move(S)), budget_(budget), parallel_(parallel) {
  if (budget_ <= 0) fail(ErrorKind::InvalidArgument, "budget must be positive");
  levels_.push_back(build_level0(S_));
}

const CubicLevel& CubicTower::level(int k) {
  if (k < 0) fail(ErrorKind::InvalidArgument, "negative level");
  while (built() <= k) levels_.push_back(lift_level(levels_.back(), S_, budget_, parallel_));
  return levels_[k];
}

cd CubicTower::state_eval(int k, const std::vector<Element>& xs) {
  if (static_cast<int>(xs.size()) != (1 << k)) fail(ErrorKind::Shape, "need one element per vertex");
  const Algebra& A = S_.algebra();
  if (k == 0) {
    const CubicLevel& L = level(0);
    return L.omega.dot(L.op_at(0, A.to_l2(xs[0])) * L.omega);
  }
  const CubicLevel& L = level(k - 1);
  const int half = 1 << (k - 1);
  std::vector<Vec> a(half), b(half);
  for (int e = 0; e < half; ++e) {
    a[e] = A.to_l2(xs[e]);
    b[e] = A.to_l2(xs[half + e]);
  }
  Vec va = L.omega, vb = L.omega;
  for (int e = 0; e < half; ++e) {
    va = L.op_at(e, a[e]).adjoint() * va;
    vb = L.op_at(e, b[e]) * vb;
  }
  va = L.P_inv.adjoint() * va;
  vb = L.P_inv.adjoint() * vb;
  return va.dot(vb);
}

cd CubicTower::state_eval_direct(int k, const std::vector<Element>& xs) {
  if (static_cast<int>(xs.size()) != (1 << k)) fail(ErrorKind::Shape, "need one element per vertex");
  const CubicLevel& L = level(k);
  Vec v = L.omega;
  for (int e = 0; e < L.vertices(); ++e) v = L.op_at(e, S_.algebra().to_l2(xs[e])) * v;
  return L.omega.dot(v);
}

static std::vector<Element> conjugation_cube(const Element& x, int k) {
  std::vector<Element> xs;
  Element xa = x.adjoint();
  for (int e = 0; e < (1 << k); ++e) xs.push_back(cube_weight(e) % 2 ? xa : x);
  return xs;
}

static double root_of(double v, int k, const ToleranceProfile& tol) {
  if (v < 0) {
    if (v >= -tol.verify) return 0.0;
    std::ostringstream os;
    os << "negative cube value " << v;
    throw Error(ErrorKind::NumericalFailure, os.str());
  }
  return std::pow(v, 1.0 / double(1 << k));
}

double CubicTower::seminorm(const Element& x, int k) {
  if (k < 1) fail(ErrorKind::InvalidArgument, "seminorm index must be >= 1");
  S_.algebra().check(x);
  return root_of(state_eval(k, conjugation_cube(x, k)).real(), k, S_.algebra().tol());
}

double CubicTower::seminorm_direct(const Element& x, int k) {
  if (k < 1) fail(ErrorKind::InvalidArgument, "seminorm index must be >= 1");
  return root_of(state_eval_direct(k, conjugation_cube(x, k)).real(), k, S_.algebra().tol());
}

Mat CubicTower::left_kernel(int k) {
  if (k < 1) fail(ErrorKind::InvalidArgument, "Z index must be >= 1");
  const auto& tol = S_.algebra().tol();
  const CubicLevel& L = level(k - 1);
  const int d = S_.dim();
  // W' = span of pi(z) Omega over z with 1 at vertex 0
  std::vector<const Mat*> maps;
  for (int e = 1; e < L.vertices(); ++e)
    for (int i = 0; i < d; ++i) maps.push_back(&L.gen_ops[e][i]);
  Mat Wp = L.omega / L.omega.norm();
  while (!maps.empty()) {
    Mat all(L.dim, Wp.cols() * (1 + static_cast<int>(maps.size())));
    all.leftCols(Wp.cols()) = Wp;
    for (std::size_t m = 0; m < maps.size(); ++m) all.middleCols((m + 1) * Wp.cols(), Wp.cols()) = *maps[m] * Wp;
    Mat next = orth(all, tol);
    if (next.cols() == Wp.cols()) break;
    Wp = next;
  }
  const int p = static_cast<int>(L.P_inv.cols()), w = static_cast<int>(Wp.cols());
  Mat K(p * w, d);
  for (int i = 0; i < d; ++i) {
    Mat Mi = L.P_inv.adjoint() * L.gen_ops[0][i].adjoint() * Wp;
    K.col(i) = Eigen::Map<const Vec>(Mi.data(), p * w);
  }
  // pi(x)^* = sum conj(c_i) ops_i^*, so the kernel holds conj(c)
  Mat ker = null_space(K, tol).conjugate();
  fix_phases(ker);
  return ker;
}

Mat CubicTower::z_subspace(int k) {
  Mat Z = complement(left_kernel(k), S_.dim(), S_.algebra().tol());
  fix_phases(Z);
  return Z;
}

Subalgebra z_algebra(CubicTower& T, int k) {
  const DynamicalSystem& S = T.system();
  Subalgebra Z = subalgebra_from_span(S.algebra(), T.z_subspace(k));
  for (const auto& U : S.koopman())
    if (containment_residual(U * Z.basis_l2(), Z.basis_l2()) > S.algebra().tol().verify * 100)
      fail(ErrorKind::SubalgebraNotInvariant, "Z subalgebra is not invariant");
  return Z;
}

TowerReport tower_report(const DynamicalSystem& S, int kmax, const std::vector<Element>& probes, long budget) {
  if (kmax < 1) fail(ErrorKind::InvalidArgument, "kmax must be >= 1");
  const auto& tol = S.algebra().tol();
  CubicTower T(S, budget);
  T.level(kmax - 1);
  TowerReport rep;
  rep.kmax = kmax;
  for (int k = 0; k < kmax; ++k) {
    const CubicLevel& L = T.level(k);
    InvariantCubes ic = invariant_cubes(L, S);
    rep.levels.push_back({k, L.dim, static_cast<int>(ic.I_basis.cols()), static_cast<int>(ic.J_basis.cols()),
                          ic.zerocoord_residual, L.side_unitarity_residual, L.side_state_residual,
                          L.traciality_residual});
  }
  std::mt19937_64 rng(0x2BEEFULL);
  std::vector<Subalgebra> zs;
  for (int k = 1; k <= kmax; ++k) {
    ZInfo zi;
    zi.k = k;
    Mat ker = T.left_kernel(k);
    zi.basis = T.z_subspace(k);
    zi.dim = static_cast<int>(zi.basis.cols());
    Subalgebra Z;
    try {
      Z = z_algebra(T, k);
      zi.is_algebra = true;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NotAnAlgebra && e.kind() != ErrorKind::SubalgebraNotInvariant) throw;
    }
    for (const auto& U : S.koopman())
      zi.invariance_residual = std::max(zi.invariance_residual, containment_residual(U * zi.basis, zi.basis));
    for (int c = 0; c < ker.cols(); ++c)
      zi.normchar_kernel_max =
          std::max(zi.normchar_kernel_max, std::pow(T.seminorm(S.algebra().from_l2(ker.col(c)), k), 1 << k));
    zi.normchar_complement_min = std::numeric_limits<double>::infinity();
    for (int trial = 0; trial < zi.dim + 20; ++trial) {
      Vec v = trial < zi.dim ? Vec(zi.basis.col(trial)) : Vec(zi.basis * random_vector(zi.dim, rng));
      v /= v.norm();
      zi.normchar_complement_min = std::min(zi.normchar_complement_min, T.seminorm(S.algebra().from_l2(v), k));
    }
    if (!rep.z.empty()) {
      rep.increasing = rep.increasing && containment_residual(rep.z.back().basis, zi.basis) <= tol.report;
      if (zi.is_algebra && !zs.empty() && zs.back().dim() > 0) {
        Restriction res = restrict_system(S, Z, zs.back());
        zi.compact_over_previous = is_compact_extension(res.system).compact;
      }
    }
    zs.push_back(Z);
    rep.z.push_back(std::move(zi));
  }
  if (kmax >= 2) rep.ap_rank_over_C = static_cast<int>(ap_decompose(with_subalgebra(S, scalar_subalgebra(S.algebra()))).ap_basis.cols());
  for (const auto& x : probes) {
    std::vector<double> row;
    for (int k = 1; k <= kmax; ++k) row.push_back(T.seminorm(x, k));
    rep.seminorms.push_back(std::move(row));
  }
  return rep;
}

}  // namespace opalg
