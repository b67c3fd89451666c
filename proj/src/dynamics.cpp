#include "opalg/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "opalg/linalg.hpp"

namespace opalg {

namespace {

[[noreturn]] void fail(ErrorKind k, const std::string& msg) { throw Error(k, msg); }

Mat mat_power(const Mat& U, int n) {
  Mat out = Mat::Identity(U.rows(), U.cols());
  for (int i = 0; i < n; ++i) out = out * U;
  return out;
}

}  // namespace

int GroupSpec::num_generators() const {
  switch (kind) {
    case GroupKind::FiniteAbelian: return static_cast<int>(orders.size());
    case GroupKind::FreeAbelian: return rank;
    case GroupKind::Presented: return static_cast<int>(labels.size());
  }
  return 0;
}

void GroupSpec::validate() const {
  if (kind == GroupKind::FiniteAbelian)
    for (int o : orders)
      if (o < 1) fail(ErrorKind::InvalidArgument, "group orders must be >= 1");
  if (kind == GroupKind::FreeAbelian && rank < 0) fail(ErrorKind::InvalidArgument, "negative rank");
  if (static_cast<int>(labels.size()) != num_generators())
    fail(ErrorKind::InvalidArgument, "one label per generator is required");
  std::set<std::string> seen(labels.begin(), labels.end());
  if (seen.size() != labels.size()) fail(ErrorKind::InvalidArgument, "duplicate generator label");
  if (kind != GroupKind::Presented && !relations.empty())
    fail(ErrorKind::InvalidArgument, "relations are only allowed for presented groups");
  for (const auto& r : relations) parse_word(r);
}

GroupWord GroupSpec::parse_word(const std::vector<std::string>& tokens) const {
  GroupWord w;
  for (const auto& t : tokens) {
    std::string name = t;
    int sign = 1;
    if (name.size() > 3 && name.compare(name.size() - 3, 3, "^-1") == 0) {
      name = name.substr(0, name.size() - 3);
      sign = -1;
    }
    auto it = std::find(labels.begin(), labels.end(), name);
    if (it == labels.end()) fail(ErrorKind::InvalidArgument, "unknown generator in word: " + t);
    w.letters.push_back(sign * (static_cast<int>(it - labels.begin()) + 1));
  }
  return w;
}

std::string GroupSpec::word_label(const GroupWord& w) const {
  if (w.letters.empty()) return "e";
  std::string out;
  for (std::size_t i = 0; i < w.letters.size(); ++i) {
    int l = w.letters[i];
    if (i) out += ' ';
    out += labels[std::abs(l) - 1];
    if (l < 0) out += "^-1";
  }
  return out;
}

static std::vector<std::string> default_labels(int n) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back(std::string(1, static_cast<char>('a' + i)));
  return out;
}

GroupSpec finite_abelian(std::vector<int> orders) {
  GroupSpec g;
  g.kind = GroupKind::FiniteAbelian;
  g.labels = default_labels(static_cast<int>(orders.size()));
  g.orders = std::move(orders);
  return g;
}

GroupSpec free_abelian(int rank) {
  GroupSpec g;
  g.kind = GroupKind::FreeAbelian;
  g.rank = rank;
  g.labels = default_labels(rank);
  return g;
}

Mat DynamicalSystem::koopman_of(const GroupWord& w) const {
  Mat U = Mat::Identity(dim(), dim());
  for (int l : w.letters) {
    const Mat& G = koopman_[std::abs(l) - 1];
    U = l > 0 ? Mat(U * G) : Mat(U * G.adjoint());
  }
  return U;
}

Element DynamicalSystem::apply(const GroupWord& w, const Element& x) const {
  return A_.from_l2(koopman_of(w) * A_.to_l2(x));
}

std::vector<GroupWord> DynamicalSystem::enumerate(int wordlen) const {
  const int n = group_.num_generators();
  std::vector<GroupWord> out;
  if (group_.kind == GroupKind::FiniteAbelian) {
    std::vector<int> e(n, 0);
    while (true) {
      GroupWord w;
      for (int g = 0; g < n; ++g)
        for (int r = 0; r < e[g]; ++r) w.letters.push_back(g + 1);
      out.push_back(w);
      int g = n - 1;
      while (g >= 0 && ++e[g] == group_.orders[g]) e[g--] = 0;
      if (g < 0) break;
    }
    return out;
  }
  if (wordlen < 0) fail(ErrorKind::InvalidArgument, "wordlen must be >= 0");
  if (group_.kind == GroupKind::FreeAbelian) {
    std::vector<int> e(n, -wordlen);
    if (n == 0) return {GroupWord{}};
    while (true) {
      int len = 0;
      for (int v : e) len += std::abs(v);
      if (len <= wordlen) {
        GroupWord w;
        for (int g = 0; g < n; ++g)
          for (int r = 0; r < std::abs(e[g]); ++r) w.letters.push_back(e[g] > 0 ? g + 1 : -(g + 1));
        out.push_back(w);
      }
      int g = n - 1;
      while (g >= 0 && ++e[g] > wordlen) e[g--] = -wordlen;
      if (g < 0) break;
    }
    return out;
  }
  // presented: breadth-first over words, keeping distinct maps
  std::vector<Mat> maps;
  auto known = [&](const Mat& U) {
    for (const auto& M : maps)
      if ((M - U).cwiseAbs().maxCoeff() <= A_.tol().verify * 100) return true;
    return false;
  };
  std::vector<GroupWord> frontier{GroupWord{}};
  maps.push_back(Mat::Identity(dim(), dim()));
  out.push_back(GroupWord{});
  for (int len = 1; len <= wordlen; ++len) {
    std::vector<GroupWord> next;
    for (const auto& w : frontier)
      for (int g = 1; g <= n; ++g)
        for (int s : {g, -g}) {
          GroupWord v = w;
          v.letters.push_back(s);
          Mat U = koopman_of(v);
          if (known(U)) continue;
          maps.push_back(U);
          out.push_back(v);
          next.push_back(v);
        }
    frontier = std::move(next);
  }
  return out;
}

Mat inner_automorphism(const Algebra& A, const Element& u) {
  return A.left_mult(u) * A.right_mult(u.adjoint());
}

Mat permutation_automorphism(const Algebra& A, const std::vector<int>& perm) {
  if (!A.is_commutative() || static_cast<int>(perm.size()) != A.dim())
    fail(ErrorKind::Shape, "permutation needs a commutative algebra and one image per point");
  std::vector<int> seen(perm.size(), 0);
  for (int p : perm) {
    if (p < 0 || p >= A.dim() || seen[p]++) fail(ErrorKind::NotAutomorphism, "not a permutation");
  }
  const int d = A.dim();
  Mat U = Mat::Zero(d, d);
  for (int i = 0; i < d; ++i) U(perm[i], i) = std::sqrt(A.weights()[perm[i]] / A.weights()[i]);
  return U;
}

DynamicalSystem make_system(const Algebra& A, const GroupSpec& group, const std::vector<Mat>& gen_maps,
                            const Subalgebra& Q) {
  group.validate();
  const auto& tol = A.tol();
  const int d = A.dim();
  if (static_cast<int>(gen_maps.size()) != group.num_generators())
    fail(ErrorKind::Shape, "one map per generator is required");
  if (!Q.parent().same_shape(A)) fail(ErrorKind::Shape, "subalgebra lives in a different algebra");

  Vec one = A.to_l2(A.identity());
  std::vector<Element> basis(d);
  for (int k = 0; k < d; ++k) basis[k] = A.basis(k);

  for (std::size_t g = 0; g < gen_maps.size(); ++g) {
    const Mat& U = gen_maps[g];
    std::string who = "generator " + group.labels[g];
    if (U.rows() != d || U.cols() != d) fail(ErrorKind::Shape, who + " has the wrong size");
    double scale = std::max(1.0, U.cwiseAbs().maxCoeff());
    double tv = tol.verify * 10 * scale;
    if ((U * one - one).norm() > tv) fail(ErrorKind::NotAutomorphism, who + " is not unital");
    std::vector<Element> img(d);
    for (int k = 0; k < d; ++k) img[k] = A.from_l2(U.col(k));
    for (int k = 0; k < d; ++k) {
      Vec lhs = U * A.star_l2(Vec::Unit(d, k));
      Vec rhs = A.star_l2(U.col(k));
      if ((lhs - rhs).norm() > tv) fail(ErrorKind::NotAutomorphism, who + " does not preserve adjoints");
    }
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        Vec lhs = U * A.to_l2(basis[i] * basis[j]);
        Vec rhs = A.to_l2(img[i] * img[j]);
        if ((lhs - rhs).norm() > tv * scale) fail(ErrorKind::NotAutomorphism, who + " is not multiplicative");
      }
    if ((U.adjoint() * one - one).norm() > tv) fail(ErrorKind::NotTracePreserving, who + " changes the trace");
    if ((U.adjoint() * U - Mat::Identity(d, d)).cwiseAbs().maxCoeff() > tv)
      fail(ErrorKind::NotTracePreserving, who + " is not isometric on L^2");
  }

  // relations as equalities of maps
  auto check_identity = [&](const Mat& M, const std::string& what) {
    if ((M - Mat::Identity(d, d)).cwiseAbs().maxCoeff() > tol.verify * 100)
      fail(ErrorKind::RelationViolated, what);
  };
  if (group.kind == GroupKind::FiniteAbelian)
    for (std::size_t g = 0; g < gen_maps.size(); ++g)
      check_identity(mat_power(gen_maps[g], group.orders[g]),
                     "generator " + group.labels[g] + " does not have order " + std::to_string(group.orders[g]));
  if (group.is_abelian())
    for (std::size_t g = 0; g < gen_maps.size(); ++g)
      for (std::size_t h = g + 1; h < gen_maps.size(); ++h) {
        Mat c = gen_maps[g] * gen_maps[h] - gen_maps[h] * gen_maps[g];
        if (c.cwiseAbs().maxCoeff() > tol.verify * 100)
          fail(ErrorKind::RelationViolated, "generators " + group.labels[g] + " and " + group.labels[h] + " do not commute");
      }

  DynamicalSystem S;
  S.A_ = A;
  S.group_ = group;
  S.koopman_ = gen_maps;
  S.Q_ = Q;
  for (const auto& r : group.relations) {
    GroupWord w = group.parse_word(r);
    check_identity(S.koopman_of(w), "relation '" + group.word_label(w) + "' fails");
  }
  for (std::size_t g = 0; g < gen_maps.size(); ++g)
    if (containment_residual(gen_maps[g] * Q.basis_l2(), Q.basis_l2()) > tol.verify * 100)
      fail(ErrorKind::SubalgebraNotInvariant, "generator " + group.labels[g] + " moves Q");
  S.ergodic_ = invariant_subspace(S).cols() == 1;
  return S;
}

DynamicalSystem with_subalgebra(const DynamicalSystem& S, const Subalgebra& Q) {
  return make_system(S.algebra(), S.group(), S.koopman(), Q);
}

Mat invariant_subspace(const std::vector<Mat>& ops, int n, const ToleranceProfile& tol) {
  std::vector<Mat> shifted;
  for (const auto& U : ops) shifted.push_back(U - Mat::Identity(n, n));
  Mat B = joint_null_space(shifted, n, tol);
  fix_phases(B);
  return B;
}

Mat invariant_subspace(const DynamicalSystem& S) {
  return invariant_subspace(S.koopman(), S.dim(), S.algebra().tol());
}

Subalgebra fixed_algebra(const DynamicalSystem& S) {
  return subalgebra_from_span(S.algebra(), invariant_subspace(S));
}

std::vector<Mat> diagonal_action(const std::vector<Mat>& U1, const std::vector<Mat>& U2, const FusionSpace& F) {
  if (U1.size() != U2.size()) fail(ErrorKind::Shape, "actions have different numbers of generators");
  std::vector<Mat> out;
  for (std::size_t g = 0; g < U1.size(); ++g) out.push_back(F.descend(kron(U1[g], U2[g]), "diagonal action"));
  return out;
}

std::vector<Mat> diagonal_action(const DynamicalSystem& S, const FusionSpace& F) {
  return diagonal_action(S.koopman(), S.koopman(), F);
}

APDecomposition ap_decompose(const DynamicalSystem& S) {
  const auto& tol = S.algebra().tol();
  FusionSpace F = build_fusion(S.Q());
  Mat inv = invariant_subspace(diagonal_action(S, F), F.dim(), tol);
  const int d = S.dim();
  Mat ranges(d, d * inv.cols());
  for (int a = 0; a < inv.cols(); ++a) ranges.middleCols(a * d, d) = convolution_operator(F, inv.col(a));
  Mat ap = orth(ranges, tol);
  fix_phases(ap);
  Mat wm = complement(ap, d, tol);
  fix_phases(wm);
  return APDecomposition{ap, wm, inv, F};
}

Subalgebra ap_subalgebra(const DynamicalSystem& S, const APDecomposition& ap) {
  return subalgebra_from_span(S.algebra(), ap.ap_basis);
}

CompactnessReport is_compact_extension(const DynamicalSystem& S) {
  return is_compact_extension(S, ap_decompose(S));
}

CompactnessReport is_compact_extension(const DynamicalSystem& S, const APDecomposition& ap) {
  const Algebra& A = S.algebra();
  const auto& tol = A.tol();
  const FusionSpace& F = ap.F;
  const int d = S.dim();
  CompactnessReport rep;
  rep.ap_rank = static_cast<int>(ap.ap_basis.cols());
  rep.wm_rank = static_cast<int>(ap.wm_basis.cols());
  rep.compact = rep.wm_rank == 0;

  BasicConstruction bc = basic_construction(S.Q());
  rep.total_dimQ = bc.tau_hat(Mat::Identity(d, d)).real();
  if (ap.witnesses.cols() == 0) {
    rep.dimQ_residual = rep.total_dimQ;
    return rep;
  }

  // one generic invariant K; T_K T_K^* is positive, commutes with the action and with right Q
  std::mt19937_64 rng(0xC0FFEEULL);
  Vec c = random_vector(static_cast<int>(ap.witnesses.cols()), rng);
  Mat T = convolution_operator(F, ap.witnesses * c);
  Mat P = T * T.adjoint();
  FusionVector Kp = fusion_vector_for_operator(F, P);

  HermEig e = hermitian_eig(0.5 * (P + P.adjoint()));
  double maxe = e.values.cwiseAbs().maxCoeff();
  double cut = rank_cutoff(maxe, tol);
  std::vector<double> levels;  // distinct nonzero eigenvalues, descending
  for (int i = d - 1; i >= 0 && e.values(i) > cut; --i)
    if (levels.empty() || levels.back() - e.values(i) > 1e-6 * maxe) levels.push_back(e.values(i));

  Mat prev(d, 0);
  for (std::size_t j = 0; j < levels.size(); ++j) {
    double thr = j + 1 < levels.size() ? 0.5 * (levels[j] + levels[j + 1]) : 0.5 * levels[j];
    CHSTruncation tr = chs_truncate(F, Kp, thr);
    Mat R = tr.range.basis;
    Mat band = R;
    if (prev.cols()) band = orth(R - prev * (prev.adjoint() * R), tol);
    fix_phases(band);
    QModule M = pimsner_popa_basis(S.Q(), band);
    for (const auto& U : S.koopman())
      rep.max_invariance_residual = std::max(rep.max_invariance_residual, containment_residual(U * band, band));
    rep.max_invariance_residual = std::max(rep.max_invariance_residual, right_invariance_residual(S.Q(), band));
    rep.module_dimQ.push_back(dimQ(S.Q(), bc, band));
    rep.module_rank_sum += M.rank();
    rep.modules.push_back(std::move(M));
    prev = R;
  }
  double s = 0;
  for (double x : rep.module_dimQ) s += x;
  rep.dimQ_residual = std::abs(s - rep.total_dimQ);
  return rep;
}

WeakMixingResult test_weak_mixing(const DynamicalSystem& S) {
  const auto& tol = S.algebra().tol();
  FusionSpace F = build_fusion(S.Q());
  Mat inv = invariant_subspace(diagonal_action(S, F), F.dim(), tol);
  Mat E = orth(F.q_image(), tol);
  WeakMixingResult out;
  for (int a = 0; a < inv.cols(); ++a) {
    Vec r = inv.col(a) - E * (E.adjoint() * inv.col(a));
    if (r.norm() > out.max_residual) {
      out.max_residual = r.norm();
      out.witness = r / r.norm();
    }
  }
  out.weakly_mixing = out.max_residual <= tol.report;
  if (out.weakly_mixing) out.witness = Vec();
  return out;
}

PopaProbeResult popa_probe(const DynamicalSystem& S, const std::vector<Element>& F, int wordlen) {
  PopaProbeResult out;
  if (F.empty()) return out;
  const Algebra& A = S.algebra();
  const auto& tol = A.tol();
  for (const auto& f : F) {
    A.check(f);
    if (hs_norm(A, cond_expect(S.Q(), f)) > tol.verify * 10 * std::max(1.0, hs_norm(A, f)))
      fail(ErrorKind::InvalidArgument, "probe elements must satisfy E_Q(f) = 0");
  }
  out.words = S.enumerate(wordlen);
  out.value = std::numeric_limits<double>::infinity();
  for (const auto& w : out.words) {
    double worst = 0;
    for (const auto& f : F)
      for (const auto& g : F) worst = std::max(worst, hs_norm(A, cond_expect(S.Q(), f * S.apply(w, g))));
    out.values.push_back(worst);
    if (worst < out.value) {
      out.value = worst;
      out.word = w;
    }
  }
  return out;
}

TruncationResult invariant_module_truncate(const DynamicalSystem& S, const Mat& V_in, double eps) {
  const Algebra& A = S.algebra();
  const auto& tol = A.tol();
  if (V_in.rows() != A.dim()) fail(ErrorKind::Shape, "subspace basis has wrong length");
  if (!(eps > 0)) fail(ErrorKind::InvalidArgument, "epsilon must be positive");
  Mat V = orth(V_in, tol);
  for (const auto& U : S.koopman())
    if (containment_residual(U * V, V) > tol.verify * 100) fail(ErrorKind::NotAModule, "subspace is not invariant");
  if (right_invariance_residual(S.Q(), V) > tol.verify * 100)
    fail(ErrorKind::NotAModule, "subspace is not right Q-invariant");

  FusionSpace F = build_fusion(S.Q());
  FusionVector K = fusion_vector_for_operator(F, V * V.adjoint());
  // P_V has spectrum in {0, 1}; any level in (0, 1] recovers V
  CHSTruncation tr = chs_truncate(F, K, 0.5);
  BasicConstruction bc = basic_construction(S.Q());
  TruncationResult out;
  out.module = tr.range;
  out.tau_V = dimQ(S.Q(), bc, V);
  out.tau_V1 = dimQ(S.Q(), bc, tr.range.basis);
  out.tau_gap = out.tau_V - out.tau_V1;
  if (containment_residual(tr.range.basis, V) > tol.report)
    fail(ErrorKind::NumericalFailure, "truncated module is not inside V");
  for (const auto& U : S.koopman())
    if (containment_residual(U * tr.range.basis, tr.range.basis) > tol.report)
      fail(ErrorKind::NumericalFailure, "truncated module is not invariant");
  if (!(out.tau_gap < eps)) {
    std::ostringstream os;
    os << "truncation gap " << out.tau_gap << " is not below " << eps;
    fail(ErrorKind::NumericalFailure, os.str());
  }
  return out;
}

double capture_residual(const DynamicalSystem& S, const QModule& M, const Vec& xi,
                        const std::vector<GroupWord>& words) {
  const Algebra& A = S.algebra();
  double worst = 0;
  for (const auto& w : words) {
    Element v = A.from_l2(S.koopman_of(w) * xi);
    worst = std::max(worst, hs_norm(A, v - M.expand(v)));
  }
  return worst;
}

Restriction restrict_system(const DynamicalSystem& S, const Subalgebra& Z, const Subalgebra& Qsub) {
  const Algebra& A = S.algebra();
  const auto& tol = A.tol();
  std::vector<Mat> ops;
  for (const auto& z : Z.basis()) ops.push_back(A.left_mult(z));
  Vec omega = A.to_l2(A.identity());
  StarDecomposition dec = decompose_star_algebra(ops, omega, tol);
  const Algebra& B = dec.algebra;
  const int dB = B.dim();
  Mat to_parent(A.dim(), dB);
  for (int m = 0; m < dB; ++m) to_parent.col(m) = dec.to_operator(B.basis(m)) * omega;
  if ((to_parent.adjoint() * to_parent - Mat::Identity(dB, dB)).cwiseAbs().maxCoeff() > tol.verify * 1e3)
    fail(ErrorKind::NumericalFailure, "restriction is not isometric");
  std::vector<Mat> maps;
  for (const auto& U : S.koopman()) {
    if (containment_residual(U * to_parent, to_parent) > tol.verify * 100)
      fail(ErrorKind::SubalgebraNotInvariant, "subalgebra is not invariant");
    maps.push_back(to_parent.adjoint() * U * to_parent);
  }
  if (containment_residual(Qsub.basis_l2(), to_parent) > tol.verify * 100)
    fail(ErrorKind::Shape, "Q is not contained in the subalgebra");
  Subalgebra Qb = subalgebra_from_span(B, to_parent.adjoint() * Qsub.basis_l2());
  return Restriction{make_system(B, S.group(), maps, Qb), dec, to_parent};
}

}  // namespace opalg
