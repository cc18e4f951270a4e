#include <gtest/gtest.h>

#include "rankone/conic.hpp"

using namespace rankone;

TEST(Validate, EmptyProgramIsClean) {
  EXPECT_TRUE(validate(ProgramBuilder().finalize()).empty());
}

TEST(Validate, PsdRowCount) {
  ProgramBuilder b;
  const auto x = b.add_variable();
  auto p = b.finalize();
  ConstraintBlock blk;
  blk.cone = ConeKind::PsdTriangle;
  blk.rows = 5;
  blk.offset.assign(5, 0.0);
  blk.coeffs.push_back({0, x, 1.0});
  p.blocks.push_back(blk);
  auto d = validate(p);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].block, 0);
  EXPECT_NE(d[0].rule.find("PSD row count 5"), std::string::npos);
}

TEST(Validate, OutOfRangeColumn) {
  ProgramBuilder b;
  b.add_variable();
  auto p = b.finalize();
  ConstraintBlock blk;
  blk.cone = ConeKind::SecondOrder;
  blk.rows = 2;
  blk.offset.assign(2, 0.0);
  blk.coeffs.push_back({1, 4, 1.0});
  p.blocks.push_back(blk);
  auto d = validate(p);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_NE(d[0].rule.find("out-of-range column"), std::string::npos);
}

TEST(Builder, UnregisteredVariable) {
  ProgramBuilder b;
  b.add_variable();
  try {
    b.add_nonnegative(AffineExpr::variable(3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnregisteredVariable);
  }
}

TEST(Builder, MergesDuplicatesAndScalesPsd) {
  ProgramBuilder b;
  const auto x = b.add_variable("x");
  AffineExpr e = AffineExpr::variable(x, 1.0) + AffineExpr::variable(x, 2.0);
  b.add_nonnegative(e);
  b.add_psd({{AffineExpr(1.0), AffineExpr()}, {AffineExpr::variable(x), AffineExpr(2.0)}});
  const auto p = b.finalize();
  ASSERT_EQ(p.blocks[0].coeffs.size(), 1u);
  EXPECT_EQ(p.blocks[0].coeffs[0].value, 3.0);
  EXPECT_EQ(p.blocks[1].psd_order(), 2u);
  // off-diagonal row carries sqrt 2
  EXPECT_DOUBLE_EQ(p.blocks[1].coeffs[0].value, kSqrt2);
}

TEST(Residuals, InteriorPointIsZero) {
  ProgramBuilder b;
  const auto x = b.add_variable();
  const auto y = b.add_variable();
  b.add_nonnegative(AffineExpr::variable(x));
  b.add_equality(AffineExpr::variable(x) + AffineExpr::variable(y) - AffineExpr(3.0));
  b.add_block(ConeKind::SecondOrder, {AffineExpr(5.0), AffineExpr::variable(x), AffineExpr::variable(y)});
  b.add_rotated_cone(AffineExpr(2.0), AffineExpr(3.0), {AffineExpr::variable(x)});
  const auto p = b.finalize();
  EXPECT_LE(residuals(p, std::vector<double>{1.0, 2.0}).max(), 1e-12);
}

TEST(Residuals, PsdNegativeEigenvalue) {
  ProgramBuilder b;
  b.add_variable();
  b.add_psd({{AffineExpr(1.0), AffineExpr()}, {AffineExpr(0.0), AffineExpr(-0.1)}});
  const auto p = b.finalize();
  EXPECT_NEAR(residuals(p, std::vector<double>{0.0}).max(), 0.1, 1e-15);
}

TEST(Residuals, ZeroConeLinearInPerturbation) {
  ProgramBuilder b;
  const auto x = b.add_variable();
  b.add_equality(AffineExpr::variable(x, 2.5) - AffineExpr(5.0));
  const auto p = b.finalize();
  EXPECT_NEAR(residuals(p, std::vector<double>{2.0}).max(), 0.0, 1e-15);
  EXPECT_NEAR(residuals(p, std::vector<double>{2.0 + 1e-3}).max(), 2.5e-3, 1e-15);
}

TEST(Residuals, RequireOptimalSolution) {
  Solution s;
  s.status = SolveStatus::Infeasible;
  EXPECT_THROW(residuals(ProgramBuilder().finalize(), s), Error);
}

TEST(Program, EvaluateObjectiveWithQuadratic) {
  ProgramBuilder b;
  const auto x = b.add_variable();
  const auto y = b.add_variable();
  b.add_objective(AffineExpr::variable(x) + AffineExpr(1.0));
  b.add_objective_product(x, x, 1.0);
  b.add_objective_product(x, y, 3.0);
  const auto p = b.finalize();
  // 1 + x + x^2 + 3xy at (2, -1)
  EXPECT_DOUBLE_EQ(p.evaluate_objective({2.0, -1.0}), 1 + 2 + 4 - 6);
}
