#include <gtest/gtest.h>

#include <cmath>

#include "rankone/solver.hpp"

using namespace rankone;

namespace {

AffineExpr var(std::size_t j, double c = 1.0) { return AffineExpr::variable(j, c); }

}  // namespace

TEST(Solver, SmallLinearProgram) {
  // max x + y  s.t.  x + 2y <= 4, 3x + y <= 6, x, y >= 0.  Vertex (1.6, 1.2).
  ProgramBuilder b;
  auto x = b.add_variable("x");
  auto y = b.add_variable("y");
  b.add_objective(var(x, -1) + var(y, -1));
  b.add_nonnegative(AffineExpr(4.0) - var(x) - var(y, 2));
  b.add_nonnegative(AffineExpr(6.0) - var(x, 3) - var(y));
  b.add_nonnegative(var(x));
  b.add_nonnegative(var(y));
  auto p = b.finalize();
  auto s = solve(p);
  ASSERT_EQ(s.status, SolveStatus::Optimal);
  EXPECT_NEAR(s.objective, -2.8, 1e-7);
  EXPECT_NEAR(s.primal[0], 1.6, 1e-6);
  EXPECT_NEAR(s.primal[1], 1.2, 1e-6);
  EXPECT_LE(residuals(p, s).max(), 1e-7);
}

TEST(Solver, DualSignConvention) {
  // min x  s.t.  x - 1 >= 0: multiplier 1.
  ProgramBuilder b;
  auto x = b.add_variable("x");
  b.add_objective(var(x));
  b.add_nonnegative(var(x) - AffineExpr(1.0));
  auto s = solve(b.finalize());
  ASSERT_EQ(s.status, SolveStatus::Optimal);
  EXPECT_NEAR(s.objective, 1.0, 1e-7);
  EXPECT_NEAR(s.duals[0][0], 1.0, 1e-6);
}

TEST(Solver, SecondOrderCone) {
  // max x  s.t.  (1, x, y) in SOC, y = 0.6
  ProgramBuilder b;
  auto x = b.add_variable("x");
  auto y = b.add_variable("y");
  b.add_objective(var(x, -1));
  b.add_block(ConeKind::SecondOrder, {AffineExpr(1.0), var(x), var(y)});
  b.add_equality(var(y) - AffineExpr(0.6));
  auto s = solve(b.finalize());
  ASSERT_EQ(s.status, SolveStatus::Optimal);
  EXPECT_NEAR(s.objective, -0.8, 1e-7);
}

TEST(Solver, RotatedConeEpigraphOfSquare) {
  // min t  s.t.  t * 1 >= w^2, w = 2
  ProgramBuilder b;
  auto t = b.add_variable("t");
  auto w = b.add_variable("w");
  b.add_objective(var(t));
  b.add_rotated_cone(var(t), AffineExpr(1.0), {var(w)});
  b.add_equality(var(w) - AffineExpr(2.0));
  auto s = solve(b.finalize());
  ASSERT_EQ(s.status, SolveStatus::Optimal);
  EXPECT_NEAR(s.primal[0], 4.0, 1e-7);
}


TEST(Solver, SemidefiniteMatchesEigenvalue) {
  for (int order : {2, 3, 5}) {
    for (bool lower : {true, false}) {
      Matrix C = Matrix::Zero(order, order);
      for (int i = 0; i < order; ++i) {
        C(i, i) = 2.0;
        if (i + 1 < order) C(i, i + 1) = C(i + 1, i) = -1.0;
      }
      ProgramBuilder b;
      std::vector<std::vector<AffineExpr>> X(order, std::vector<AffineExpr>(order));
      AffineExpr trace;
      for (int j = 0; j < order; ++j) {
        for (int i = j; i < order; ++i) {
          auto v = b.add_variable();
          X[i][j] = var(v);
          b.add_objective(var(v, i == j ? C(i, j) : 2 * C(i, j)));
          if (i == j) trace += var(v);
        }
      }
      b.add_psd(X);
      b.add_equality(trace - AffineExpr(1.0));
      SolverConfig cfg;
      cfg.lower_psd2 = lower;
      auto p = b.finalize();
      auto s = solve(p, cfg);
      ASSERT_EQ(s.status, SolveStatus::Optimal) << order << " " << s.message;
      EXPECT_NEAR(s.objective, min_eigenvalue(C), 1e-7) << order;
      EXPECT_LE(residuals(p, s).max(), 1e-7);
    }
  }
}

TEST(Solver, DetectsInfeasibility) {
  ProgramBuilder b;
  auto x = b.add_variable("x");
  b.add_objective(var(x));
  b.add_nonnegative(var(x) - AffineExpr(1.0));
  b.add_nonnegative(-var(x));
  auto s = solve(b.finalize());
  EXPECT_EQ(s.status, SolveStatus::Infeasible);
}

TEST(Solver, DetectsUnboundedness) {
  ProgramBuilder b;
  auto x = b.add_variable("x");
  auto y = b.add_variable("y");
  b.add_objective(var(x));
  b.add_nonnegative(var(y) - var(x));
  b.add_nonnegative(AffineExpr(1.0) - var(y));
  auto s = solve(b.finalize());
  EXPECT_EQ(s.status, SolveStatus::Unbounded);
  ASSERT_EQ(s.certificate.size(), 2u);
  EXPECT_LT(s.certificate[0], 0.0);
}

TEST(Solver, ConvexQuadraticObjective) {
  // x^2 - 2x + y^2 + xy  minimised at x = 4/3, y = -2/3, value -4/3
  ProgramBuilder b;
  auto x = b.add_variable("x");
  auto y = b.add_variable("y");
  b.add_objective_product(x, x, 1.0);
  b.add_objective_product(y, y, 1.0);
  b.add_objective_product(x, y, 1.0);
  b.add_objective(var(x, -2));
  auto p = b.finalize();
  auto s = solve(p);
  ASSERT_EQ(s.status, SolveStatus::Optimal);
  EXPECT_NEAR(s.primal[0], 4.0 / 3.0, 1e-4);
  EXPECT_NEAR(s.primal[1], -2.0 / 3.0, 1e-4);
  EXPECT_NEAR(p.evaluate_objective(s.primal), -4.0 / 3.0, 1e-7);
}

TEST(Solver, RejectsNonConvexQuadratic) {
  ProgramBuilder b;
  auto x = b.add_variable("x");
  b.add_objective_product(x, x, -1.0);
  try {
    solve(b.finalize());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidSpec);
  }
}

TEST(Solver, VariableBounds) {
  ProgramBuilder b;
  auto x = b.add_variable("x", 2.0, 5.0);
  b.add_objective(var(x));
  auto s = solve(b.finalize());
  ASSERT_EQ(s.status, SolveStatus::Optimal);
  EXPECT_NEAR(s.primal[0], 2.0, 1e-7);
}

TEST(Solver, NesterovToddScalingIdentities) {
  using namespace rankone::detail;
  std::vector<Segment> segs{{SegKind::Soc, 0, 3, 0}, {SegKind::Psd, 3, 6, 3}};
  Vector s(9), z(9);
  s << 2.0, 0.3, -0.5, 0, 0, 0, 0, 0, 0;
  z << 1.5, -0.7, 0.2, 0, 0, 0, 0, 0, 0;
  Matrix S(3, 3), Z(3, 3);
  S << 2, 0.3, 0.1, 0.3, 1, -0.2, 0.1, -0.2, 1.5;
  Z << 1, -0.4, 0, -0.4, 2, 0.3, 0, 0.3, 0.8;
  s.tail(6) = svec(S);
  z.tail(6) = svec(Z);
  Scaling sc;
  ASSERT_TRUE(compute_scaling(segs, s, z, sc));
  // lambda = W z and s = W' lambda.
  Vector wz = apply_W(segs, sc, z, false);
  EXPECT_LE((wz - sc.lambda).norm(), 1e-12);
  Vector wtl = apply_W(segs, sc, sc.lambda, true);
  EXPECT_LE((wtl - s).norm(), 1e-12);
}
