#include <gtest/gtest.h>

#include <filesystem>

#include "rankone/harness.hpp"

using namespace rankone;

TEST(Gap, WorkedCases) {
  EXPECT_EQ(gap(10, 10).value, 0.0);
  EXPECT_EQ(gap(10, 5).value, 0.5);
  EXPECT_TRUE(gap(10, 10.001).anomaly);
  EXPECT_FALSE(gap(10, 10 + 1e-6).anomaly);
  EXPECT_THROW(gap(0, 1), Error);
  EXPECT_THROW(gap(-1, -2), Error);
}

TEST(Grids, ExactLattice) {
  auto l = lambda_grid(3);
  ASSERT_EQ(l.size(), 3u);
  EXPECT_DOUBLE_EQ(l[0], 0.25 / 0.75);
  EXPECT_DOUBLE_EQ(l[1], 1.0);
  EXPECT_DOUBLE_EQ(l[2], 3.0);
  auto k = k_grid(100, 4);
  EXPECT_DOUBLE_EQ(k[0], 10.0);
  EXPECT_DOUBLE_EQ(k[3], 40.0);
  for (double v : k_grid(100, 100)) {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 50.0);
  }
  auto mixed = cv_candidates("hinge+conic1", 100, 100);
  EXPECT_EQ(mixed.size(), 100u);
  EXPECT_EQ(mixed[49].method, "hinge");
  EXPECT_EQ(mixed[50].method, "conic1");
  EXPECT_EQ(cv_candidates("hinge", 10, 1).size(), 1u);
  EXPECT_THROW(cv_candidates("svm", 10, 3), Error);
}

TEST(ParallelFor, EveryIndexOnceAndErrorsPropagate) {
  std::vector<int> hits(100, 0);
  parallel_for(100, 4, [&](std::size_t i) { hits[i] += 1; });
  EXPECT_EQ(std::count(hits.begin(), hits.end(), 1), 100);
  EXPECT_THROW(parallel_for(10, 3, [](std::size_t i) {
                 if (i == 7) throw Error(ErrorCode::InvalidSpec, "boom");
               }),
               Error);
}

TEST(BoundExperiment, ConicGapInRange) {
  ExperimentConfig cfg;
  cfg.methods = {"conic1", "exact"};
  cfg.n = 12;
  cfg.p = 3;
  cfg.k = 2;
  cfg.sigma = 0.5;
  cfg.seed = 4;
  cfg.replications = 3;
  auto rows = run_bound_experiment(cfg);
  ASSERT_EQ(rows.size(), 6u);
  for (std::size_t r = 0; r < 3; ++r) {
    const auto& c = rows[2 * r];
    const auto& e = rows[2 * r + 1];
    EXPECT_EQ(c.method, "conic1");
    ASSERT_TRUE(c.bound.has_value());
    if (e.bound) {
      EXPECT_LE(*c.bound, *e.bound + 1e-6 * (1 + std::abs(*e.bound)));
      if (c.gap) {
        EXPECT_GE(*c.gap, -1e-6);
        EXPECT_LT(*c.gap, 1.0);
      }
    } else {
      EXPECT_EQ(e.status, "infeasible");
    }
  }
}

TEST(BoundExperiment, ExportRowsAndCounts) {
  ExperimentConfig cfg;
  cfg.methods = {"bigm-export", "decomposition"};
  cfg.n = 6;
  cfg.replications = 5;
  cfg.out_dir = (std::filesystem::temp_directory_path() / "rankone_bench").string();
  auto rows = run_bound_experiment(cfg);
  EXPECT_EQ(rows.size(), 10u);
  EXPECT_EQ(rows[0].status, "exported");
  EXPECT_FALSE(rows[0].bound.has_value());
  EXPECT_TRUE(std::filesystem::exists(rows[0].note));
  std::filesystem::remove_all(cfg.out_dir);
  cfg.methods = {"nope"};
  EXPECT_THROW(run_bound_experiment(cfg), Error);
}

TEST(BoundExperiment, DeterministicAcrossThreads) {
  ExperimentConfig cfg;
  cfg.methods = {"exact", "conic1", "conic2", "decomposition", "bigm"};
  cfg.n = 8;
  cfg.k = 1;
  cfg.replications = 4;
  cfg.seed = 21;
  const std::string a = bench_csv(run_bound_experiment(cfg), {false, false});
  cfg.threads = 3;
  const std::string b = bench_csv(run_bound_experiment(cfg), {false, false});
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.rfind("instance,method,bound", 0), 0u);
  EXPECT_EQ(bench_csv({}, {true, false}).rfind("# generated ", 0), 0u);
}

TEST(Cv, SingleGridPointAndBayes) {
  ExperimentConfig cfg;
  cfg.methods = {"hinge", "bayes", "robust-l1", "conic1"};
  cfg.grid_size = 1;
  cfg.n = 20;
  cfg.n_test = 500;
  cfg.sigma = 0.2;
  auto rows = run_cv(cfg);
  ASSERT_EQ(rows.size(), 4u);
  for (const auto& r : rows) {
    EXPECT_EQ(r.status, "ok") << r.method;
    EXPECT_EQ(r.hyper_index, 0u);
    EXPECT_GE(r.test_rate, 0.0);
    EXPECT_LE(r.test_rate, 1.0);
  }
  EXPECT_LT(rows[1].test_rate, 0.05);
}

TEST(Cv, DeterministicAcrossThreads) {
  ExperimentConfig cfg;
  cfg.methods = {"hinge", "hinge+conic1"};
  cfg.grid_size = 4;
  cfg.n = 16;
  cfg.n_test = 300;
  cfg.outlier_class = OutlierClass::Clustered;
  cfg.replications = 2;
  cfg.seed = 5;
  const std::string a = cv_csv(run_cv(cfg), {false, false});
  cfg.threads = 4;
  const std::string b = cv_csv(run_cv(cfg), {false, false});
  EXPECT_EQ(a, b);
  auto md = cv_markdown(run_cv(cfg));
  EXPECT_NE(md.find("| hinge+conic1 | 2 |"), std::string::npos);
}

TEST(Cv, CsvSourceWithFlips) {
  auto g = generate({OutlierClass::None, 40, 2, 0.3, 8});
  const auto path = (std::filesystem::temp_directory_path() / "rankone_cv.csv").string();
  save_csv(g.dataset, path);
  ExperimentConfig cfg;
  cfg.methods = {"hinge"};
  cfg.grid_size = 3;
  cfg.csv_path = path;
  cfg.tau = 0.1;
  auto rows = run_cv(cfg);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].status, "ok");
  cfg.methods = {"bayes"};
  EXPECT_THROW(run_cv(cfg), Error);
  std::filesystem::remove(path);
}

TEST(Summary, MeansAndStd) {
  std::vector<CvRow> rows(3);
  for (std::size_t i = 0; i < 3; ++i) {
    rows[i].method = "m";
    rows[i].status = "ok";
    rows[i].test_rate = 0.1 * static_cast<double>(i + 1);
  }
  auto s = summarize(rows);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_NEAR(s[0].mean, 0.2, 1e-15);
  EXPECT_NEAR(s[0].stddev, 0.1, 1e-15);
}

TEST(Figures, SvgOutput) {
  auto g = generate({OutlierClass::Clustered, 50, 2, 0.5, 1});
  auto svg = scatter_svg(g.dataset, {{"bayes", g.bayes_w}});
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("<line"), std::string::npos);
  EXPECT_NE(loss_curve_svg({1.0, 1.0}).find("<path"), std::string::npos);
  auto g3 = generate({OutlierClass::None, 5, 3, 0.5, 1});
  EXPECT_THROW(scatter_svg(g3.dataset, {}), Error);
}

TEST(Cv, NoOutliersHingeCloseToConic) {
  ExperimentConfig cfg;
  cfg.methods = {"hinge", "conic1"};
  cfg.sigma = 0.2;
  cfg.n = 100;
  cfg.n_test = 5000;
  cfg.grid_size = 10;
  cfg.replications = 5;
  const auto s = summarize(run_cv(cfg));
  ASSERT_EQ(s.size(), 2u);
  EXPECT_LE(std::abs(s[0].mean - s[1].mean), 0.02);
}
