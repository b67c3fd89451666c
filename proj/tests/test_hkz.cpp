#include <gtest/gtest.h>

#include "opalg/fixtures.hpp"
#include "opalg/hkz.hpp"
#include "oracles.hpp"

using namespace opalg;

namespace {

std::optional<ErrorKind> kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

Element from_values(const Algebra& A, const std::vector<cd>& f) {
  std::vector<Mat> b;
  for (cd v : f) b.push_back(Mat::Constant(1, 1, v));
  Element x(b);
  A.check(x);
  return x;
}

std::vector<cd> random_values(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> N;
  std::vector<cd> f(n);
  for (auto& v : f) v = cd(N(rng), N(rng));
  return f;
}

// Z_2 x Z_2 acting freely on four points
DynamicalSystem klein() {
  Algebra C4({1, 1, 1, 1}, {0.25, 0.25, 0.25, 0.25});
  return make_system(C4, finite_abelian({2, 2}),
                     {permutation_automorphism(C4, {1, 0, 3, 2}), permutation_automorphism(C4, {2, 3, 0, 1})},
                     scalar_subalgebra(C4));
}

std::vector<Element> cube_of(const std::vector<Element>& xs) {
  std::vector<Element> out;
  for (std::size_t e = 0; e < xs.size(); ++e)
    out.push_back(cube_weight(static_cast<int>(e)) % 2 ? xs[e].adjoint() : xs[e]);
  return out;
}

const std::vector<std::string> kErgodic = {"A", "B", "C"};

}  // namespace

TEST(HKZ, FaceValidation) {
  EXPECT_EQ(kind_of([] { Face{{1}, {0, 1}}.validate(2); }), ErrorKind::Face);
  EXPECT_EQ(kind_of([] { Face{{3}, {0}}.validate(2); }), ErrorKind::Face);
  EXPECT_EQ(kind_of([] { Face{{1, 1}, {0, 0}}.validate(2); }), ErrorKind::Face);
  EXPECT_EQ(kind_of([] { Face{{1}, {2}}.validate(2); }), ErrorKind::Face);
  Face s = side(2, 1);
  EXPECT_TRUE(s.contains(0b10));
  EXPECT_TRUE(s.contains(0b11));
  EXPECT_FALSE(s.contains(0b01));
  EXPECT_TRUE(full_face().contains(0b101));
  EXPECT_EQ(cube_weight(0b1011), 3);
}

TEST(HKZ, SeminormsMatchGowersOnRotations) {
  std::mt19937_64 rng(51);
  std::vector<DynamicalSystem> systems;
  for (int n = 2; n <= 5; ++n) systems.push_back(fixtures::rotation(n));
  systems.push_back(klein());
  for (auto& S : systems) {
    const int n = S.dim();
    auto perms = oracle::group_perms(S);
    CubicTower T(S);
    for (int t = 0; t < 3; ++t) {
      auto f = random_values(n, rng);
      Element x = from_values(S.algebra(), f);
      for (int k = 1; k <= 3; ++k) EXPECT_NEAR(T.seminorm(x, k), oracle::gowers(perms, f, k), 1e-8) << n << " k=" << k;
    }
  }
}

TEST(HKZ, CubeStateMatchesCubeMeasure) {
  for (const char* name : {"A", "C"}) {
    DynamicalSystem S = fixtures::by_name(name);
    const Algebra& A = S.algebra();
    const int n = S.dim();
    auto perms = oracle::group_perms(S);
    CubicTower T(S);
    for (int k = 1; k <= 3; ++k) {
      const int V = 1 << k;
      // every assignment of point indicators to the vertices, capped for n = 4, k = 3
      long total = 1;
      for (int e = 0; e < V; ++e) total *= n;
      long stride = std::max(1L, total / 512);
      double worst = 0;
      for (long code = 0; code < total; code += stride) {
        std::vector<Element> xs;
        std::vector<std::vector<cd>> f;
        long c = code;
        for (int e = 0; e < V; ++e) {
          std::vector<cd> v(n, 0.0);
          v[c % n] = 1.0;
          c /= n;
          xs.push_back(from_values(A, v));
          f.push_back(v);
        }
        worst = std::max(worst, std::abs(T.state_eval(k, xs) - oracle::cube_average(perms, f, k)));
        if (k < 3) worst = std::max(worst, std::abs(T.state_eval_direct(k, xs) - oracle::cube_average(perms, f, k)));
      }
      EXPECT_LE(worst, 1e-10) << name << " k=" << k;
    }
  }
}

// all 256 Gram entries of the 16 indicator tensors at level 2; the Gram has rank 8, not 16,
// because the cube measure on Z_2 lives on 8 of the 16 configurations
TEST(HKZ, SwapLevelTwoGram) {
  DynamicalSystem S = fixtures::sys_a();
  const Algebra& A = S.algebra();
  auto perms = oracle::group_perms(S);
  CubicTower T(S);
  auto indicator = [](int code, int e) {
    std::vector<cd> v(2, 0.0);
    v[code >> e & 1] = 1.0;
    return v;
  };
  Mat G(16, 16);
  double worst = 0;
  for (int a = 0; a < 16; ++a)
    for (int b = 0; b < 16; ++b) {
      std::vector<Element> xs;
      std::vector<std::vector<cd>> f;
      for (int e = 0; e < 4; ++e) {
        auto va = indicator(a, e), vb = indicator(b, e);
        std::vector<cd> prod = {std::conj(va[0]) * vb[0], std::conj(va[1]) * vb[1]};
        xs.push_back(from_values(A, prod));
        f.push_back(prod);
      }
      G(a, b) = T.state_eval(2, xs);
      worst = std::max(worst, std::abs(G(a, b) - oracle::cube_average(perms, f, 2)));
    }
  EXPECT_LE(worst, 1e-12);
  EXPECT_EQ(orth(G, A.tol()).cols(), 8);
  EXPECT_EQ(T.level(2).dim, 8);
}

// SYS-A at level 1: the state is the product measure, the side at vertex 1 moves only the second factor
TEST(HKZ, SideTransformationExample) {
  DynamicalSystem S = fixtures::sys_a();
  const Algebra& A = S.algebra();
  CubicTower T(S);
  const CubicLevel& L = T.level(1);
  EXPECT_EQ(L.dim, 4);
  Mat U = face_transformation(L, S, GroupWord{{1}}, side(1, 1));
  Vec d0 = A.to_l2(A.matrix_unit(0, 0, 0)), d1 = A.to_l2(A.matrix_unit(1, 0, 0));
  Vec lhs = U * L.op_of({d0, d0}) * L.omega;
  Vec rhs = L.op_of({d0, d1}) * L.omega;
  EXPECT_LE((lhs - rhs).norm(), 1e-12);
  EXPECT_NEAR(rhs.squaredNorm(), 0.25, 1e-12);
  Mat D = face_transformation(L, S, GroupWord{{1}}, full_face());
  EXPECT_LE((D * L.op_of({d0, d1}) * L.omega - L.op_of({d1, d0}) * L.omega).norm(), 1e-12);
}

TEST(HKZ, LiftedSidesAgreeWithDirectConstruction) {
  for (const char* name : {"A", "B", "C"}) {
    DynamicalSystem S = fixtures::by_name(name);
    const int ng = S.group().num_generators();
    CubicTower T(S);
    for (int k = 1; k <= 2; ++k) {
      const CubicLevel& L = T.level(k);
      ASSERT_EQ(static_cast<int>(L.side_unitaries.size()), k * 2 * ng);
      for (int g = 0; g < ng; ++g) {
        GroupWord w{{g + 1}};
        EXPECT_LE((L.diagonal_unitaries[g] - face_transformation(L, S, w, full_face())).cwiseAbs().maxCoeff(), 1e-9)
            << name;
        for (int j = 1; j <= k; ++j)
          for (int eta = 0; eta <= 1; ++eta) {
            const Mat& U = L.side_unitaries[((j - 1) * 2 + eta) * ng + g];
            EXPECT_LE((U - face_transformation(L, S, w, side(j, eta))).cwiseAbs().maxCoeff(), 1e-9)
                << name << " k=" << k << " side " << j << "=" << eta;
          }
      }
      EXPECT_LE(L.side_unitarity_residual, 1e-9);
      EXPECT_LE(L.side_state_residual, 1e-9);
      // the cube state on M_2 is not tracial from level 2 on; see CubeStateTraciality
      if (S.algebra().is_commutative() || k == 1) EXPECT_LE(L.traciality_residual, 1e-9) << name;
    }
  }
}

// Observed, not assumed: on SYS-B the level-2 state fails tau(ab) = tau(ba) by a fixed amount.
TEST(HKZ, CubeStateTraciality) {
  CubicTower B(fixtures::sys_b());
  EXPECT_LE(B.level(1).traciality_residual, 1e-9);
  EXPECT_GT(B.level(2).traciality_residual, 0.1);
  CubicTower A(fixtures::sys_a());
  EXPECT_LE(A.level(3).traciality_residual, 1e-9);
}

TEST(HKZ, SeminormExamples) {
  for (const auto& n : kErgodic) {
    CubicTower T(fixtures::by_name(n));
    // exact up to rounding in the lifted state vector
    for (int k = 1; k <= 3; ++k) EXPECT_DOUBLE_EQ(T.seminorm(T.system().algebra().identity(), k), 1.0) << n;
  }
  DynamicalSystem S = fixtures::sys_a();
  CubicTower T(S);
  Element f = from_values(S.algebra(), {1.0, -1.0});
  EXPECT_NEAR(T.seminorm(f, 1), 0.0, 1e-8);
  EXPECT_NEAR(T.seminorm(f, 2), 1.0, 1e-8);
  EXPECT_NEAR(T.seminorm(f, 3), 1.0, 1e-8);
  EXPECT_NEAR(T.seminorm_direct(f, 2), 1.0, 1e-8);
}

TEST(HKZ, SeminormProperties) {
  std::mt19937_64 rng(52);
  const double slack = 1e-7;
  for (const auto& n : kErgodic) {
    DynamicalSystem S = fixtures::by_name(n);
    const Algebra& A = S.algebra();
    CubicTower T(S);
    const int kmax = 3;
    for (int t = 0; t < 100; ++t) {
      Element x = random_element(A, rng), y = random_element(A, rng);
      cd c(std::normal_distribution<double>()(rng), std::normal_distribution<double>()(rng));
      double prev = 0;
      for (int k = 1; k <= kmax; ++k) {
        double nx = T.seminorm(x, k), ny = T.seminorm(y, k);
        EXPECT_NEAR(T.seminorm(c * x, k), std::abs(c) * nx, slack * (1 + std::abs(c) * nx)) << n;
        EXPECT_LE(T.seminorm(x + y, k), nx + ny + slack) << n;
        EXPECT_GE(nx, prev - slack) << n;
        prev = nx;
      }
      // Gowers-Cauchy-Schwarz on independent vertices
      for (int k = 1; k <= std::min(kmax, 2); ++k) {
        std::vector<Element> xs;
        double bound = 1;
        for (int e = 0; e < (1 << k); ++e) {
          xs.push_back(random_element(A, rng));
          bound *= T.seminorm(xs.back(), k);
        }
        EXPECT_LE(std::abs(T.state_eval(k, cube_of(xs))), bound + slack) << n << " k=" << k;
      }
    }
  }
}

TEST(HKZ, ZFactorsAndNormCharacterization) {
  std::mt19937_64 rng(53);
  for (const auto& n : kErgodic) {
    DynamicalSystem S = fixtures::by_name(n);
    const Algebra& A = S.algebra();
    CubicTower T(S);
    // Z_0 = C, Z_1 = N
    Mat z0 = T.z_subspace(1);
    ASSERT_EQ(z0.cols(), 1) << n;
    EXPECT_LE(containment_residual(A.to_l2(A.identity()), z0), 1e-9) << n;
    EXPECT_EQ(T.z_subspace(2).cols(), S.dim()) << n;
    EXPECT_EQ(z_algebra(T, 1).dim(), 1) << n;
    EXPECT_EQ(z_algebra(T, 2).dim(), S.dim()) << n;
    EXPECT_EQ(ap_decompose(with_subalgebra(S, scalar_subalgebra(A))).ap_basis.cols(), S.dim()) << n;
    // the left kernel at level 1 is the complement of the constants, and there |||x|||_1 = 0
    Mat K = T.left_kernel(1);
    EXPECT_EQ(K.cols() + z0.cols(), S.dim()) << n;
    for (int c = 0; c < K.cols(); ++c) EXPECT_LE(T.seminorm(A.from_l2(K.col(c)), 1), 1e-4) << n;
    for (int t = 0; t < 10; ++t) {
      Element x = random_element(A, rng);
      Element ex = cond_expect(scalar_subalgebra(A), x);
      if (hs_norm(A, ex) > 1e-3) EXPECT_GT(T.seminorm(x, 1), 1e-4) << n;
    }
  }
}

TEST(HKZ, TowerReport) {
  DynamicalSystem S = fixtures::sys_a();
  Element f = from_values(S.algebra(), {1.0, -1.0});
  TowerReport r = tower_report(S, 3, {S.algebra().identity(), f});
  EXPECT_EQ(r.kmax, 3);
  EXPECT_TRUE(r.increasing);
  EXPECT_EQ(r.ap_rank_over_C, 2);
  ASSERT_GE(r.z.size(), 2u);
  EXPECT_EQ(r.z[0].dim, 1);
  EXPECT_EQ(r.z[1].dim, 2);
  for (const auto& z : r.z) {
    EXPECT_TRUE(z.is_algebra);
    EXPECT_TRUE(z.compact_over_previous);
    EXPECT_LE(z.invariance_residual, 1e-9);
    EXPECT_LE(z.normchar_kernel_max, 1e-9);
  }
  ASSERT_EQ(r.seminorms.size(), 2u);
  EXPECT_NEAR(r.seminorms[0][0], 1.0, 1e-12);
  EXPECT_NEAR(r.seminorms[1][0], 0.0, 1e-8);
  EXPECT_NEAR(r.seminorms[1][1], 1.0, 1e-8);
  EXPECT_NEAR(r.seminorms[1][2], 1.0, 1e-8);
  for (const auto& n : kErgodic) {
    TowerReport t = tower_report(fixtures::by_name(n), 2, {});
    EXPECT_TRUE(t.increasing) << n;
    EXPECT_EQ(t.z.back().dim, fixtures::by_name(n).dim()) << n;
  }
}

TEST(HKZ, Errors) {
  EXPECT_EQ(kind_of([] {
              CubicTower T(fixtures::sys_d());
              T.level(1);
            }),
            ErrorKind::NotErgodic);
  EXPECT_EQ(kind_of([] {
              CubicTower T(fixtures::rotation(4), 1);
              T.level(3);
            }),
            ErrorKind::BudgetExceeded);
  CubicTower T(fixtures::sys_a());
  EXPECT_EQ(kind_of([&] { T.seminorm(T.system().algebra().identity(), 0); }), ErrorKind::InvalidArgument);
}

TEST(HKZ, SerialAndParallelLiftsAgree) {
  for (const char* name : {"B", "C"}) {
    DynamicalSystem S = fixtures::by_name(name);
    CubicTower P(S, default_budget(), true), Q(S, default_budget(), false);
    const CubicLevel& a = P.level(2);
    const CubicLevel& b = Q.level(2);
    ASSERT_EQ(a.dim, b.dim);
    double worst = 0;
    for (std::size_t e = 0; e < a.gen_ops.size(); ++e)
      for (std::size_t i = 0; i < a.gen_ops[e].size(); ++i)
        worst = std::max(worst, (a.gen_ops[e][i] - b.gen_ops[e][i]).cwiseAbs().maxCoeff());
    EXPECT_LE(worst, 1e-10) << name;
  }
}
