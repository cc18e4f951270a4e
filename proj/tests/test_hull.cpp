#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "rankone/hull.hpp"

using namespace rankone;

TEST(HullRhs, WorkedValues) {
  EXPECT_DOUBLE_EQ(eval_hull_rhs(RankOneSet({1.0}), {0.5}, {0.5}), 0.5);
  EXPECT_DOUBLE_EQ(eval_hull_rhs(RankOneSet({1.0, 1.0}), {0.0, 0.0}, {0.3, 0.7}), 0.0);
  EXPECT_NEAR(eval_hull_rhs(RankOneSet({1.0, 1.0}), {0.5, -0.2}, {0.3, 0.1}), 0.225, 1e-15);
}

TEST(HullRhs, ZeroOverZeroAndInfinity) {
  RankOneSet s({1.0, 1.0});
  EXPECT_EQ(eval_hull_rhs(s, {0.0, 0.0}, {0.0, 0.0}), 0.0);
  EXPECT_TRUE(std::isinf(eval_hull_rhs(s, {1.0, 0.0}, {0.0, 0.0})));
  // Negative part sees D- = min{1, 2} = 1.
  EXPECT_DOUBLE_EQ(eval_hull_rhs(s, {-1.0, 0.0}, {0.0, 0.0}), 1.0);
}

TEST(HullRhs, RejectsBadInputs) {
  RankOneSet s({1.0, 2.0});
  try {
    eval_hull_rhs(s, {0.0, 0.0}, {0.5, 1.5});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ZOutOfBounds);
  }
  try {
    eval_hull_rhs(s, {0.0}, {0.5, 0.5});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
}

TEST(HullRhs, ZeroEntriesOfDAreDropped) {
  // z of an index with d_i = 0 does not enter the denominators.
  RankOneSet s({1.0, 0.0});
  EXPECT_DOUBLE_EQ(eval_hull_rhs(s, {1.0, 5.0}, {0.5, 1.0}), 2.0);
}

TEST(Membership, Examples) {
  EXPECT_TRUE(check_membership(RankOneSet({1.0, -2.0, 3.0}), {{0, 0, 0}, {0.2, 0.9, 0.4}, 0.0}));
  EXPECT_FALSE(check_membership(RankOneSet({1.0}), {{0.5}, {0.5}, 0.4}));
  EXPECT_TRUE(check_membership(RankOneSet({1.0, 1.0}), {{1.0, 0.0}, {1.0, 0.0}, 1.0}));
  EXPECT_DOUBLE_EQ(eval_hull_rhs(RankOneSet({1.0, 1.0}), {1.0, 0.0}, {1.0, 0.0}), 1.0);
  EXPECT_THROW(check_membership(RankOneSet({1.0}), {{0.0}, {-0.1}, 0.0}), Error);
}

TEST(OneSided, WorkedValues) {
  const auto os = Sidedness::OneSided;
  EXPECT_DOUBLE_EQ(eval_one_sided_rhs(RankOneSet({1.0, -1.0}, os), {1.0, 0.0}, {0.0, 0.0}), 1.0);
  EXPECT_DOUBLE_EQ(eval_one_sided_rhs(RankOneSet({1.0, 1.0}, os), {1.0, 0.0}, {0.25, 0.25}), 2.0);
  for (double z : {0.0, 0.3, 1.0}) {
    EXPECT_DOUBLE_EQ(eval_one_sided_rhs(RankOneSet({1.0, 1.0}, os), {-1.0, 0.0}, {z, z}), 1.0);
  }
  // d <= 0 mirrors d >= 0.
  EXPECT_DOUBLE_EQ(eval_one_sided_rhs(RankOneSet({-1.0, -1.0}, os), {1.0, 0.0}, {0.25, 0.25}), 2.0);
}

TEST(OneSided, MixedSignsIsPlainSquare) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2, 2), uz(0, 1);
  for (int trial = 0; trial < 200; ++trial) {
    RankOneSet s({u(rng), -std::abs(u(rng)) - 0.1, std::abs(u(rng)) + 0.1}, Sidedness::OneSided);
    std::vector<double> x{u(rng), u(rng), u(rng)}, z{uz(rng), uz(rng), uz(rng)};
    const double y = s.d[0] * x[0] + s.d[1] * x[1] + s.d[2] * x[2];
    EXPECT_DOUBLE_EQ(eval_one_sided_rhs(s, x, z), y * y);
  }
}

namespace {

std::vector<double> random_d(std::mt19937_64& rng, std::size_t n, bool nonneg) {
  std::uniform_real_distribution<double> mag(0.2, 2.0);
  std::bernoulli_distribution coin(0.5);
  std::vector<double> d(n);
  for (auto& v : d) v = (nonneg || coin(rng)) ? mag(rng) : -mag(rng);
  return d;
}

// Integer-feasible point: z binary and x signs consistent with z.
HullPoint random_integer_point(std::mt19937_64& rng, const RankOneSet& s) {
  std::uniform_real_distribution<double> mag(0.0, 2.0);
  std::bernoulli_distribution coin(0.5);
  HullPoint p;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const bool z = coin(rng);
    p.z.push_back(z ? 1.0 : 0.0);
    double x = mag(rng);
    if (s.side == Sidedness::TwoSided) {
      x = z ? x : -x;
    } else if (!z || coin(rng)) {
      x = -x;
    }
    p.x.push_back(x);
  }
  double y = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) y += s.d[i] * p.x[i];
  p.t = y * y;
  return p;
}

}  // namespace

TEST(HullProperties, ValidOnIntegerPoints) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t n = 1 + trial % 8;
    const auto side = trial % 2 ? Sidedness::OneSided : Sidedness::TwoSided;
    RankOneSet s(random_d(rng, n, false), side);
    HullPoint p = random_integer_point(rng, s);
    ASSERT_TRUE(check_membership(s, p, 1e-9 * (1 + p.t))) << trial;
  }
}

TEST(HullProperties, MidpointConvexity) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-2, 2), uz(0, 1);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = 1 + trial % 5;
    RankOneSet s(random_d(rng, n, false));
    std::vector<double> x1(n), x2(n), z1(n), z2(n), xm(n), zm(n);
    for (std::size_t i = 0; i < n; ++i) {
      x1[i] = u(rng), x2[i] = u(rng), z1[i] = uz(rng), z2[i] = uz(rng);
      xm[i] = 0.5 * (x1[i] + x2[i]);
      zm[i] = 0.5 * (z1[i] + z2[i]);
    }
    const double r1 = eval_hull_rhs(s, x1, z1);
    const double r2 = eval_hull_rhs(s, x2, z2);
    EXPECT_LE(eval_hull_rhs(s, xm, zm), 0.5 * (r1 + r2) + 1e-9 * (1 + r1 + r2));
  }
}

TEST(HullProperties, SignFlipEquivariance) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-2, 2), uz(0, 1);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + trial % 6;
    RankOneSet s(random_d(rng, n, false));
    std::vector<double> x(n), z(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = u(rng), z[i] = uz(rng);
    RankOneSet s2 = s;
    auto x2 = x, z2 = z;
    for (std::size_t i = 0; i < n; ++i) {
      if (s.d[i] < 0) {
        s2.d[i] = -s.d[i];
        x2[i] = -x[i];
        z2[i] = 1.0 - z[i];
      }
    }
    const double a = eval_hull_rhs(s, x, z);
    EXPECT_NEAR(eval_hull_rhs(s2, x2, z2), a, 1e-12 * (1 + a));
  }
}

TEST(HullSocp, StructureForPositiveD) {
  ProgramBuilder b;
  auto x = b.add_variables(2, "x");
  auto z = b.add_variables(2, "z");
  auto t = b.add_variable("t");
  const std::size_t before = b.num_vars();
  auto hb = build_hull_socp(RankOneSet({1.0, 2.0}), b, x, z, t);
  EXPECT_EQ(b.num_vars() - before, 4u);
  EXPECT_EQ(hb.cone_blocks.size(), 2u);
  EXPECT_EQ(hb.linear_blocks.size(), 7u);
  auto p = b.finalize();
  for (auto i : hb.cone_blocks) EXPECT_EQ(p.blocks[i].cone, ConeKind::RotatedSecondOrder);
}

TEST(HullSocp, RejectsUnregisteredHandles) {
  ProgramBuilder b;
  auto x = b.add_variables(1, "x");
  try {
    build_hull_socp(RankOneSet({1.0}), b, x, {7}, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnregisteredVariable);
  }
}

TEST(HullSocp, MinimalEpigraphMatchesRhs) {
  for (double target : {1.0, 0.0}) {
    ProgramBuilder b;
    auto x = b.add_variables(2, "x");
    std::vector<std::size_t> z{b.add_variable("z0", 0, 1), b.add_variable("z1", 0, 1)};
    auto t = b.add_variable("t");
    build_hull_socp(RankOneSet({1.0, 1.0}), b, x, z, t);
    b.add_equality(AffineExpr::variable(x[0]) + AffineExpr::variable(x[1]) - AffineExpr(target));
    b.add_equality(AffineExpr::variable(z[0]) + AffineExpr::variable(z[1]) - AffineExpr(0.5));
    b.add_objective(AffineExpr::variable(t));
    auto s = solve(b.finalize());
    ASSERT_EQ(s.status, SolveStatus::Optimal);
    EXPECT_NEAR(s.objective, target == 1.0 ? 2.0 : 0.0, 1e-7);
  }
}

TEST(PhiLoss, WorkedValues) {
  EXPECT_EQ(phi_loss(-3, {1, 1}), 0.0);
  EXPECT_EQ(phi_loss(2, {1, 1}), 1.0);
  EXPECT_DOUBLE_EQ(phi_loss(0.5, {1, 1}), 0.75);
  EXPECT_EQ(phi_argmin_z(0, {1, 1}), 0.0);
  EXPECT_DOUBLE_EQ(phi_argmin_z(0.5, {1, 1}), 0.5);
  EXPECT_EQ(phi_argmin_z(5, {1, 1}), 1.0);
  EXPECT_THROW(phi_loss(1, {0, 1}), Error);
  EXPECT_THROW(phi_argmin_z(1, {1, -1}), Error);
}

TEST(PhiLoss, ShapeAndBoundary) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> pd(0.05, 3), px(-3, 3);
  for (int trial = 0; trial < 500; ++trial) {
    LossParams p{pd(rng), pd(rng)};
    const double knee = std::sqrt(p.lambda / p.d);
    EXPECT_EQ(phi_loss(knee, p), p.lambda);
    EXPECT_EQ(phi_loss(knee * 1.5, p), p.lambda);
    const double a = px(rng), b = px(rng);
    const double lo = std::min(a, b), hi = std::max(a, b);
    EXPECT_LE(phi_loss(lo, p), phi_loss(hi, p) + 1e-15);
    EXPECT_GE(phi_loss(a, p), 0.0);
    EXPECT_LE(phi_loss(a, p), p.lambda);
    // The closed-form minimizer attains the closed-form value.
    EXPECT_NEAR(phi_inner(a, phi_argmin_z(a, p), p), phi_loss(a, p), 1e-12 * (1 + p.lambda));
  }
}

TEST(ExactOracle, WorkedCases) {
  auto r = exact_linear_opt(RankOneSet({1.0}), {{1.0}, {0.0}, -1.0});
  EXPECT_TRUE(r.unbounded);
  r = exact_linear_opt(RankOneSet({1.0, 1.0}), {{1.0, 2.0}, {0.0, 0.0}, 1.0});
  EXPECT_TRUE(r.unbounded);
  r = exact_linear_opt(RankOneSet({1.0}), {{-1.0}, {0.1}, 1.0});
  ASSERT_FALSE(r.unbounded);
  EXPECT_NEAR(r.value, -0.15, 1e-15);
  EXPECT_EQ(r.z[0], 1.0);
  EXPECT_NEAR(r.x[0], 0.5, 1e-15);
  EXPECT_NEAR(r.t, 0.25, 1e-15);
  EXPECT_THROW(exact_linear_opt(RankOneSet(std::vector<double>(21, 1.0)),
                                {std::vector<double>(21, 0.0), std::vector<double>(21, 0.0), 1.0}),
               Error);
}

TEST(ExactOracle, MatchesDenseGrid) {
  // Grid over x in [-2, 2]^2 at step 0.01 for each binary z, t = (d'x)^2.
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 20; ++trial) {
    const auto side = trial % 2 ? Sidedness::OneSided : Sidedness::TwoSided;
    RankOneSet s({u(rng) + (u(rng) > 0 ? 1.2 : -1.2), u(rng) + 1.5}, side);
    const double eta = u(rng);
    LinearObjective obj{{eta * s.d[0], eta * s.d[1]}, {0.3 * u(rng), 0.3 * u(rng)}, 1.0};
    auto r = exact_linear_opt(s, obj);
    ASSERT_FALSE(r.unbounded);
    double best = kInf;
    for (int mask = 0; mask < 4; ++mask) {
      const bool z0 = mask & 1, z1 = mask & 2;
      for (int a = -200; a <= 200; ++a) {
        for (int b = -200; b <= 200; ++b) {
          const double x0 = 0.01 * a, x1 = 0.01 * b;
          auto ok = [&](double x, bool z) {
            return side == Sidedness::TwoSided ? (z ? x >= 0 : x <= 0) : (z || x <= 0);
          };
          if (!ok(x0, z0) || !ok(x1, z1)) continue;
          const double y = s.d[0] * x0 + s.d[1] * x1;
          const double v = obj.alpha[0] * x0 + obj.alpha[1] * x1 + obj.beta[0] * z0 + obj.beta[1] * z1 + y * y;
          best = std::min(best, v);
        }
      }
    }
    EXPECT_LE(r.value, best + 1e-12);
    EXPECT_NEAR(r.value, best, 1e-3);
  }
}

TEST(HullExactness, TwoSidedAgreesWithOracle) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 2 + trial % 5;
    RankOneSet s(random_d(rng, n, false));
    LinearObjective obj;
    const double eta = 2 * u(rng);
    for (std::size_t i = 0; i < n; ++i) {
      obj.alpha.push_back(eta * s.d[i]);
      obj.beta.push_back(u(rng));
    }
    obj.gamma = 1.0;
    auto exact = exact_linear_opt(s, obj);
    auto relax = optimize_over_hull(s, obj);
    ASSERT_FALSE(exact.unbounded);
    ASSERT_TRUE(relax.has_value());
    EXPECT_NEAR(*relax, exact.value, 1e-6 * (1 + std::abs(exact.value))) << trial;
  }
}

TEST(HullExactness, UnboundedCasesAgree) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 2 + trial % 3;
    RankOneSet s(random_d(rng, n, false), trial % 2 ? Sidedness::OneSided : Sidedness::TwoSided);
    LinearObjective obj;
    for (std::size_t i = 0; i < n; ++i) {
      obj.alpha.push_back(u(rng));
      obj.beta.push_back(u(rng));
    }
    obj.gamma = trial < 5 ? -1.0 : 1.0;
    auto exact = exact_linear_opt(s, obj);
    auto relax = optimize_over_hull(s, obj);
    EXPECT_EQ(exact.unbounded, !relax.has_value()) << trial;
  }
}

TEST(HullExactness, OneSidedAgreesWithOracle) {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 2 + trial % 5;
    RankOneSet s(random_d(rng, n, trial % 2 == 0), Sidedness::OneSided);
    LinearObjective obj;
    const double eta = 2 * u(rng);
    for (std::size_t i = 0; i < n; ++i) {
      obj.alpha.push_back(eta * s.d[i]);
      obj.beta.push_back(u(rng));
    }
    obj.gamma = 1.0;
    auto exact = exact_linear_opt(s, obj);
    auto relax = optimize_over_hull(s, obj);
    ASSERT_EQ(exact.unbounded, !relax.has_value()) << trial;
    if (!exact.unbounded) EXPECT_NEAR(*relax, exact.value, 1e-6 * (1 + std::abs(exact.value))) << trial;
  }
}
