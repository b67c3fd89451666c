#include <gtest/gtest.h>

#include "opalg/fixtures.hpp"
#include "opalg/fusion.hpp"

using namespace opalg;

namespace {

Element delta(const Algebra& A, int i) { return A.matrix_unit(i, 0, 0); }

FusionVector random_fusion(const FusionSpace& F, std::mt19937_64& rng) { return random_vector(F.dim(), rng); }

}  // namespace

TEST(Fusion, DimensionExamples) {
  Algebra M2({2}, {1.0});
  Algebra C3({1, 1, 1}, {0.2, 0.3, 0.5});
  EXPECT_EQ(build_fusion(scalar_subalgebra(M2)).dim(), 16);
  EXPECT_EQ(build_fusion(scalar_subalgebra(C3)).dim(), 9);
  EXPECT_EQ(build_fusion(full_subalgebra(M2)).dim(), 4);
  DynamicalSystem C = fixtures::sys_c();
  EXPECT_EQ(build_fusion(C.Q()).dim(), 8);
}

TEST(Fusion, OverNIsMultiplication) {
  std::mt19937_64 rng(31);
  Algebra A({2, 1}, {0.5, 0.5});
  FusionSpace F = build_fusion(full_subalgebra(A));
  for (int t = 0; t < 10; ++t) {
    Element x = random_element(A, rng), y = random_element(A, rng);
    EXPECT_NEAR(embed(F, x, y).norm(), hs_norm(A, x * y), 1e-10);
    EXPECT_LE((embed(F, x, y) - embed(F, x * y, A.identity())).norm(), 1e-10);
  }
}

TEST(Fusion, EmbedNormAndBalancing) {
  std::mt19937_64 rng(32);
  Algebra A({2, 2}, {0.3, 0.7});
  Subalgebra Q = fixtures::diagonal(A);
  FusionSpace F = build_fusion(Q);
  auto qb = Q.basis();
  EXPECT_NEAR(embed(F, A.identity(), A.identity()).norm(), 1.0, 1e-12);
  double worst = 0, bal = 0, flip = 0;
  for (int t = 0; t < 20; ++t) {
    Element x = random_element(A, rng), y = random_element(A, rng);
    Element x2 = random_element(A, rng), y2 = random_element(A, rng);
    cd want = trace(A, y.adjoint() * cond_expect(Q, x.adjoint() * x) * y);
    worst = std::max(worst, std::abs(fusion_inner(embed(F, x, y), embed(F, x, y)) - want));
    const Element& q = qb[t % qb.size()];
    bal = std::max(bal, (embed(F, x * q, y) - embed(F, x, q * y)).norm());
    cd a = fusion_inner(embed(F, x, y), embed(F, x2, y2)), b = fusion_inner(embed(F, x2, y2), embed(F, x, y));
    flip = std::max(flip, std::abs(a - std::conj(b)));
  }
  EXPECT_LE(worst, 1e-10);
  EXPECT_LE(bal, 1e-10);
  EXPECT_LE(flip, 1e-12);
}

TEST(Fusion, DifferentFibersGiveZero) {
  DynamicalSystem C = fixtures::sys_c();
  const Algebra& A = C.algebra();
  FusionSpace F = build_fusion(C.Q());
  // fibers {0,1} and {2,3}
  EXPECT_LE(embed(F, delta(A, 0), delta(A, 2)).norm(), 1e-12);
  EXPECT_GT(embed(F, delta(A, 0), delta(A, 1)).norm(), 0.1);
}

TEST(Fusion, ModuleActions) {
  std::mt19937_64 rng(33);
  Algebra A({2, 1}, {0.6, 0.4});
  Subalgebra Q = generate_subalgebra(A, {A.matrix_unit(0, 0, 0)});
  FusionSpace F = build_fusion(Q);
  Element a = random_element(A, rng), b = random_element(A, rng), x = random_element(A, rng);
  FusionVector v = embed(F, a, b);
  EXPECT_LE((module_actions(F, Side::Left, A.identity(), v) - v).norm(), 1e-12);
  EXPECT_LE((module_actions(F, Side::Left, x, v) - embed(F, x * a, b)).norm(), 1e-10);
  EXPECT_LE((module_actions(F, Side::Right, x, v) - embed(F, a, b * x)).norm(), 1e-10);
  FusionVector one = embed(F, A.identity(), A.identity());
  for (const auto& q : Q.basis())
    EXPECT_LE((module_actions(F, Side::Right, q, one) - module_actions(F, Side::Left, q, one)).norm(), 1e-10);
  // bounded by the operator norm
  for (int t = 0; t < 10; ++t) {
    FusionVector w = random_fusion(F, rng);
    EXPECT_LE(module_actions(F, Side::Left, x, w).norm(), op_norm(x) * w.norm() + 1e-10);
  }
}

TEST(Fusion, CornerProjectAndConvolution) {
  std::mt19937_64 rng(34);
  Algebra A({2, 2}, {0.5, 0.5});
  Subalgebra Q = fixtures::diagonal(A);
  FusionSpace F = build_fusion(Q);
  Element x = random_element(A, rng), y = random_element(A, rng), f = random_element(A, rng);
  EXPECT_LE((corner_project(F, embed(F, x, A.identity())) - x).max_abs(), 1e-10);
  EXPECT_LE((corner_project(F, embed(F, x, y)) - x * cond_expect(Q, y)).max_abs(), 1e-10);
  FusionVector one = embed(F, A.identity(), A.identity());
  EXPECT_LE((cond_convolve(F, one, f) - cond_expect(Q, f)).max_abs(), 1e-10);
  EXPECT_LE((cond_convolve(F, embed(F, x, y), f) - x * cond_expect(Q, y * f)).max_abs(), 1e-10);

  FusionSpace FC = build_fusion(scalar_subalgebra(A));
  EXPECT_LE((cond_convolve(FC, embed(FC, x, y), f) - trace(A, y * f) * x).max_abs(), 1e-10);
  FusionSpace FN = build_fusion(full_subalgebra(A));
  EXPECT_LE((cond_convolve(FN, embed(FN, x, y), f) - x * y * f).max_abs(), 1e-10);
  // convolution_operator agrees with cond_convolve
  FusionVector K = random_fusion(F, rng);
  EXPECT_LE((convolution_operator(F, K) * A.to_l2(f) - A.to_l2(cond_convolve(F, K, f))).norm(), 1e-10);
}

TEST(Fusion, FlipAdjoint) {
  std::mt19937_64 rng(35);
  Algebra A({2, 1}, {0.5, 0.5});
  FusionSpace F = build_fusion(fixtures::diagonal(A));
  FusionVector K = random_fusion(F, rng);
  Mat T = convolution_operator(F, K);
  EXPECT_LE((convolution_operator(F, flip_adjoint(F, K)) - T.adjoint()).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE((fusion_vector_for_operator(F, T) - K).norm(), 1e-9);
}

TEST(Fusion, TruncationExamples) {
  Algebra M2({2}, {1.0});
  Subalgebra D = fixtures::diagonal(M2);
  FusionSpace F = build_fusion(D);
  FusionVector one = embed(F, M2.identity(), M2.identity());
  CHSTruncation tr = chs_truncate(F, one, 0.5);
  EXPECT_LE((tr.projection - D.projector()).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_EQ(tr.range.rank(), 2);
  EXPECT_EQ(chs_truncate(F, one, 2.0).range.rank(), 0);

  DynamicalSystem S = fixtures::sys_a();
  const Algebra& A = S.algebra();
  FusionSpace FA = build_fusion(S.Q());
  FusionVector K = embed(FA, delta(A, 0), delta(A, 0)) + embed(FA, delta(A, 1), delta(A, 1));
  EXPECT_LE((convolution_operator(FA, K) - 0.5 * Mat::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-12);
  CHSTruncation full = chs_truncate(FA, K, 0.25);
  EXPECT_EQ(full.range.rank(), 2);
  EXPECT_LE(full.tail_norm, 0.25 + 1e-10);
}

TEST(Fusion, TruncationRangesIncrease) {
  std::mt19937_64 rng(36);
  Algebra A({2, 2}, {0.5, 0.5});
  Subalgebra Q = fixtures::diagonal(A);
  FusionSpace F = build_fusion(Q);
  // a positive convolution operator
  Mat T0 = convolution_operator(F, random_fusion(F, rng));
  FusionVector K = fusion_vector_for_operator(F, T0 * T0.adjoint());
  Mat prev(A.dim(), 0);
  for (double eps : {1.0, 0.3, 0.1, 0.03, 0.01, 1e-6}) {
    CHSTruncation tr = chs_truncate(F, K, eps);
    EXPECT_LE(containment_residual(prev, tr.range.basis), 1e-9);
    EXPECT_LE(tr.tail_norm, eps + 1e-10);
    EXPECT_LE(right_invariance_residual(Q, tr.range.basis), 1e-9);
    prev = tr.range.basis;
  }
  Mat T = convolution_operator(F, K);
  EXPECT_EQ(prev.cols(), orth(T, A.tol()).cols());
}

TEST(Fusion, ConditionalHilbertSchmidtTraceIdentity) {
  std::mt19937_64 rng(37);
  for (std::string name : {"A", "B", "C", "D"}) {
    DynamicalSystem S = fixtures::by_name(name);
    const Algebra& A = S.algebra();
    FusionSpace F = build_fusion(S.Q());
    QModule M = pimsner_popa_basis(S.Q(), Mat::Identity(A.dim(), A.dim()));
    double worst = 0;
    for (int t = 0; t < 50; ++t) {
      FusionVector K = random_fusion(F, rng);
      Mat T = convolution_operator(F, K);
      double s = 0;
      for (const auto& xi : M.pp_basis) s += (T * A.to_l2(xi)).squaredNorm();
      worst = std::max(worst, std::abs(s - K.squaredNorm()) / std::max(1.0, K.squaredNorm()));
    }
    EXPECT_LE(worst, 1e-7) << name;
  }
}

TEST(Fusion, FiberProductOracle) {
  FiberProduct fp = commutative_fiber_oracle({0.25, 0.25, 0.25, 0.25}, {0, 0, 1, 1});
  EXPECT_EQ(fp.atoms.size(), 8u);
  for (double m : fp.masses) EXPECT_NEAR(m, 0.125, 1e-15);
  EXPECT_TRUE(fp.dims_match);
  EXPECT_EQ(fp.fusion_dim, 8);
  EXPECT_LE(fp.max_inner_residual, 1e-9);

  FiberProduct diag = commutative_fiber_oracle({0.1, 0.2, 0.3, 0.4}, {0, 1, 2, 3});
  EXPECT_EQ(diag.atoms.size(), 4u);
  EXPECT_NEAR(diag.masses[2], 0.3, 1e-15);
  EXPECT_TRUE(diag.dims_match);

  FiberProduct prod = commutative_fiber_oracle({0.1, 0.2, 0.3, 0.4}, {0, 0, 0, 0});
  EXPECT_EQ(prod.atoms.size(), 16u);
  EXPECT_TRUE(prod.dims_match);
  EXPECT_LE(prod.max_inner_residual, 1e-9);

  FiberProduct uneven = commutative_fiber_oracle({0.1, 0.2, 0.3, 0.15, 0.25}, {0, 1, 0, 1, 1});
  EXPECT_TRUE(uneven.dims_match);
  EXPECT_LE(uneven.max_inner_residual, 1e-9);

  try {
    commutative_fiber_oracle({0.5, 0.0, 0.5}, {0, 0, 1});
    ADD_FAILURE() << "zero mass accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Mass);
  }
}

TEST(Fusion, IdentificationChecked) {
  Algebra M2({2}, {1.0});
  Subalgebra D = fixtures::diagonal(M2);
  Identification id = identity_identification(D);
  EXPECT_NO_THROW(verify_identification(D, D, id));
  Identification bad{2.0 * id.image};
  try {
    verify_identification(D, D, bad);
    ADD_FAILURE() << "scaled identification accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Identification);
  }
}

TEST(Fusion, SerialAndParallelGramsAgree) {
  Algebra A({3, 2}, {0.5, 0.5});
  Subalgebra Q = fixtures::diagonal(A);
  FusionSpace a = build_fusion(Q, false), b = build_fusion(Q, true);
  EXPECT_LE((a.gram() - b.gram()).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_EQ(a.dim(), b.dim());
}
