#include <gtest/gtest.h>

#include <random>

#include "rankone/relaxations.hpp"

using namespace rankone;

namespace {

ExtendedPoint random_integer_point(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  std::bernoulli_distribution zero(0.15);
  Vector x(static_cast<Eigen::Index>(n));
  Vector z(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    z(i) = coin(rng) ? 1.0 : 0.0;
    const double mag = zero(rng) ? 0.0 : std::abs(g(rng));
    x(i) = z(i) == 1.0 ? mag : -mag;
  }
  return ExtendedPoint::rank_one(x, z);
}

std::vector<std::vector<std::size_t>> subsets(std::size_t n, std::size_t kmax) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t mask = 1; mask < (std::size_t{1} << n); ++mask) {
    std::vector<std::size_t> s;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask >> i & 1) s.push_back(i);
    }
    if (s.size() <= kmax) out.push_back(s);
  }
  return out;
}

// Independent copositivity probe: random nonnegative directions.
double sampled_min(const Matrix& M, std::mt19937_64& rng, int samples) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double best = kInf;
  for (int k = 0; k < samples; ++k) {
    Vector v(M.rows());
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = u(rng);
    v /= v.sum();
    best = std::min(best, v.dot(M * v));
  }
  return best;
}

}  // namespace

TEST(SubsetMatrices, WorkedCases) {
  ExtendedPoint pt{Vector::Zero(1), Matrix::Zero(1, 1), Vector::Constant(1, 0.5)};
  auto ms = copositive_matrices_for_subset(pt, {{0}, Sidedness::TwoSided});
  ASSERT_EQ(ms.size(), 2u);
  Matrix expect(2, 2);
  expect << 0.5, 0, 0, 0;
  EXPECT_TRUE(ms[0].isApprox(expect));
  EXPECT_TRUE(ms[1].isApprox(expect));

  Vector x(2);
  x << 1, 1;
  auto ip = ExtendedPoint::rank_one(x, Vector::Ones(2));
  auto m2 = copositive_matrices_for_subset(ip, {{0, 1}, Sidedness::TwoSided});
  Matrix first(3, 3);
  first << 2, -1, -1, -1, 1, 1, -1, 1, 1;
  EXPECT_TRUE(m2[0].isApprox(first));
  EXPECT_TRUE(grid_copositivity_check(m2[0]).copositive);

  EXPECT_EQ(copositive_matrices_for_subset(ip, {{0, 1}, Sidedness::OneSided}).size(), 1u);
}

TEST(SubsetMatrices, RejectsBadSpecs) {
  auto pt = ExtendedPoint::rank_one(Vector::Ones(2), Vector::Ones(2));
  EXPECT_THROW(copositive_matrices_for_subset(pt, {{}, Sidedness::TwoSided}), Error);
  EXPECT_THROW(copositive_matrices_for_subset(pt, {{1, 0}, Sidedness::TwoSided}), Error);
  EXPECT_THROW(copositive_matrices_for_subset(pt, {{0, 2}, Sidedness::TwoSided}), Error);
}

TEST(GridCopositivity, WorkedCases) {
  Matrix nonneg(2, 2);
  nonneg << 0, 1, 1, 0;
  EXPECT_TRUE(grid_copositivity_check(nonneg).copositive);

  Matrix bad(2, 2);
  bad << 1, -2, -2, 1;
  auto r = grid_copositivity_check(bad);
  EXPECT_FALSE(r.copositive);
  EXPECT_NEAR(r.min_value, -0.5, 1e-12);
  EXPECT_NEAR(r.witness(0), 0.5, 1e-12);
  EXPECT_NEAR(r.witness(1), 0.5, 1e-12);

  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int k = 0; k < 20; ++k) {
    Matrix B(4, 4);
    for (Eigen::Index i = 0; i < B.size(); ++i) B.data()[i] = g(rng);
    EXPECT_TRUE(grid_copositivity_check(B * B.transpose(), 30).copositive);
  }
  EXPECT_THROW(grid_copositivity_check(Matrix::Identity(7, 7)), Error);
}

TEST(GridCopositivity, PointCountAndWitnessAgainstSampling) {
  Matrix I3 = Matrix::Identity(3, 3);
  // C(12, 2) grid points + 3 vertices + 3 midpoints.
  EXPECT_EQ(grid_copositivity_check(I3, 10).evaluated, 66u + 6u);

  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  for (int k = 0; k < 30; ++k) {
    Matrix B(3, 3);
    for (Eigen::Index i = 0; i < B.size(); ++i) B.data()[i] = g(rng);
    const Matrix M = 0.5 * (B + B.transpose());
    auto r = grid_copositivity_check(M, 60);
    EXPECT_NEAR(r.witness.sum(), 1.0, 1e-12);
    EXPECT_GE(r.witness.minCoeff(), 0.0);
    // A dense grid cannot be beaten by much by random probes.
    EXPECT_LE(r.min_value, sampled_min(M, rng, 4000) + 0.05 * M.cwiseAbs().maxCoeff());
  }
}

TEST(GridCopositivity, ExactTwoByTwo) {
  Matrix m(2, 2);
  m << 1, -1, -1, 1;  // b + sqrt(ac) = 0
  EXPECT_TRUE(grid_copositivity_check(m, 7).copositive);
  m << 1, -1.001, -1.001, 1;
  auto r = grid_copositivity_check(m, 7);
  EXPECT_FALSE(r.copositive);
  EXPECT_LT(r.min_value, 0.0);
}

TEST(SdpExtension, Structure) {
  ProgramBuilder b;
  const auto x = b.add_variable("x");
  const auto X = b.add_variable("X");
  const auto z = b.add_variable("z");
  auto ext = sdp_extension_for_subset({{0}, Sidedness::TwoSided}, b, {AffineExpr::variable(x)},
                                      {{AffineExpr::variable(X)}}, {AffineExpr::variable(z)});
  EXPECT_EQ(ext.g.size() + ext.h.size(), 2u);
  EXPECT_EQ(ext.blocks.size(), 2u);
  auto p = b.finalize();
  EXPECT_EQ(p.num_vars, 5u);
  std::size_t rows = 0;
  std::size_t psd = 0;
  for (const auto& blk : p.blocks) {
    if (blk.cone == ConeKind::Nonnegative) ++rows;
    if (blk.cone == ConeKind::PsdTriangle) {
      ++psd;
      EXPECT_EQ(blk.psd_order(), 2u);
    }
  }
  EXPECT_EQ(rows, 2u);
  EXPECT_EQ(psd, 2u);

  ProgramBuilder b1;
  const auto x1 = b1.add_variable();
  auto one = sdp_extension_for_subset({{0}, Sidedness::OneSided}, b1, {AffineExpr::variable(x1)},
                                      {{AffineExpr(1.0)}}, {AffineExpr(0.0)});
  EXPECT_TRUE(one.h.empty());
  EXPECT_EQ(one.blocks.size(), 1u);

  ProgramBuilder b2;
  EXPECT_THROW(sdp_extension_for_subset({{0}, Sidedness::TwoSided}, b2, {AffineExpr::variable(9)},
                                        {{AffineExpr(1.0)}}, {AffineExpr(0.0)}),
               Error);
}

TEST(SdpExtension, CertificatesFromTheProof) {
  // sum z >= 1: g = x works.
  Vector x(2);
  x << 1.5, -0.5;
  Vector z(2);
  z << 1, 0;
  auto pt = ExtendedPoint::rank_one(x, z);
  EXPECT_GE(sdp_extension_certificate(pt, {{0, 1}, Sidedness::TwoSided}), -1e-12);
  EXPECT_TRUE(sdp_extension_feasible(pt, {{0, 1}, Sidedness::TwoSided}));
  // z_S = 0 and x_S <= 0: g = 0 works.
  EXPECT_GE(sdp_extension_certificate(pt, {{1}, Sidedness::OneSided}), -1e-12);
  EXPECT_TRUE(sdp_extension_feasible(pt, {{1}, Sidedness::OneSided}));
}

TEST(SdpExtension, CutsFractionalPoint) {
  // x = 1 with z = 0 violates x(1 - z) <= 0 and the extension sees it:
  // g >= 1 but [[0, -g], [-g, 1]] needs g = 0.
  ExtendedPoint pt{Vector::Ones(1), Matrix::Ones(1, 1), Vector::Zero(1)};
  EXPECT_FALSE(sdp_extension_feasible(pt, {{0}, Sidedness::OneSided}));
  EXPECT_FALSE(grid_copositivity_check(copositive_matrices_for_subset(pt, {{0}, Sidedness::OneSided})[0]).copositive);
}

TEST(Validity, IntegerPointsSatisfyEveryFamily) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> size(1, 5);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  std::size_t violations = 0;
  std::size_t solves = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = size(rng);
    const auto pt = random_integer_point(rng, n);
    ASSERT_TRUE(pt.lifted_psd());
    std::vector<double> d(n);
    for (auto& v : d) v = u(rng);
    const double lhs = d.empty() ? 0.0 : to_vector(d).dot(pt.X * to_vector(d));
    if (lhs < fixed_d_rhs(pt, d) - 1e-8) ++violations;
    for (const auto& S : subsets(n, 3)) {
      for (auto side : {Sidedness::TwoSided, Sidedness::OneSided}) {
        SubsetConstraintSpec spec{S, side};
        for (const auto& M : copositive_matrices_for_subset(pt, spec)) {
          if (!grid_copositivity_check(M, 20).copositive) ++violations;
        }
        if (sdp_extension_certificate(pt, spec) < -1e-8) ++violations;
        if (trial % 50 == 0 && side == Sidedness::TwoSided) {
          ++solves;
          if (!sdp_extension_feasible(pt, spec)) ++violations;
        }
      }
    }
  }
  EXPECT_EQ(violations, 0u);
  EXPECT_GT(solves, 0u);
}

TEST(Equivalence, WorkedCases) {
  auto a = cp_sdp_equivalence_check(1.0, Vector::Zero(2), Matrix::Identity(2, 2));
  EXPECT_TRUE(a.copositive);
  EXPECT_TRUE(a.sdp_feasible);
  EXPECT_TRUE(a.agree);

  auto b = cp_sdp_equivalence_check(0.0, Vector::Ones(1), Matrix::Ones(1, 1));
  EXPECT_TRUE(b.copositive);
  EXPECT_TRUE(b.sdp_feasible);
  EXPECT_LE(b.y(0), 1.0 + 1e-7);

  auto c = cp_sdp_equivalence_check(0.05, -Vector::Ones(1), Matrix::Ones(1, 1));
  EXPECT_FALSE(c.copositive);
  EXPECT_FALSE(c.sdp_feasible);
  EXPECT_TRUE(c.agree);

  Matrix notpsd(1, 1);
  notpsd << -1;
  EXPECT_THROW(cp_sdp_equivalence_check(1.0, Vector::Zero(1), notpsd), Error);
}

TEST(Equivalence, OneDimensionalClosedForm) {
  // [[t, x], [x, X]] is copositive iff t >= 0, X >= 0 and x >= -sqrt(tX).
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 40; ++k) {
    const double t = std::abs(u(rng));
    const double X = std::abs(u(rng)) + 0.1;
    const double x = 1.5 * u(rng);
    const double margin = x + std::sqrt(t * X);
    if (std::abs(margin) < 1e-3) continue;
    auto r = cp_sdp_equivalence_check(t, Vector::Constant(1, x), Matrix::Constant(1, 1, X));
    EXPECT_EQ(r.copositive, margin > 0) << t << " " << x << " " << X;
    EXPECT_EQ(r.sdp_feasible, margin > 0) << t << " " << x << " " << X;
  }
}

TEST(BigM, Structure) {
  Matrix f(2, 1);
  f << 1, -1;
  SvmDataset ds(f, {1, -1}, true);
  auto p = build_bigm_model(ds, 1000, SvmMode::penalty(1));
  EXPECT_EQ(p.num_vars, 4u);
  EXPECT_EQ(std::count(p.integer.begin(), p.integer.end(), 1), 2);
  std::size_t rows = 0;
  for (const auto& b : p.blocks) rows += b.label.rfind("bigm", 0) == 0;
  EXPECT_EQ(rows, 2u);
  EXPECT_TRUE(p.has_quadratic());
  EXPECT_THROW(build_bigm_model(ds, 0.0), Error);
}

TEST(BigM, RelaxationIsNearlyVacuous) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  std::bernoulli_distribution coin(0.5);
  for (int k = 0; k < 20; ++k) {
    const std::size_t n = 6 + static_cast<std::size_t>(k % 5);
    Matrix f(static_cast<Eigen::Index>(n), 2);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = coin(rng) ? 1.0 : -1.0;
      f(static_cast<Eigen::Index>(i), 0) = y[i] + g(rng);
      f(static_cast<Eigen::Index>(i), 1) = g(rng);
    }
    SvmDataset ds(f, y, true);
    const double lambda = 0.5 + k;
    const double M = 1000;
    const Solution relax = solve(build_bigm_model(ds, M, SvmMode::penalty(lambda)));
    ASSERT_EQ(relax.status, SolveStatus::Optimal);
    EXPECT_LE(relax.objective, lambda * static_cast<double>(n) / M + 1e-8);
    const Solution hinge = solve(build_hinge(ds, lambda / M));
    ASSERT_EQ(hinge.status, SolveStatus::Optimal);
    EXPECT_NEAR(relax.objective, hinge.objective, 1e-5);
  }
}
