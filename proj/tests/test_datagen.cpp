#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <set>

#include "rankone/datagen.hpp"

using namespace rankone;

TEST(Rng, StreamsAreReproducibleAndDistinct) {
  Rng a(7, 3);
  Rng b(7, 3);
  Rng c(7, 4);
  for (int k = 0; k < 10; ++k) {
    const auto x = a.next();
    EXPECT_EQ(x, b.next());
    EXPECT_NE(x, c.next());
  }
  EXPECT_EQ(splitmix64(0), 0xE220A8397B1DCDAFULL);  // published first output for state 0
}

TEST(Rng, NormalMoments) {
  Rng r(11);
  const int n = 200000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double v = r.normal();
    s += v;
    s2 += v * v;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.01);
}

TEST(Generate, Deterministic) {
  GenSpec spec{OutlierClass::None, 4, 2, 0.2, 7};
  auto a = generate(spec);
  auto b = generate(spec);
  EXPECT_EQ(a.dataset.features, b.dataset.features);
  EXPECT_EQ(a.dataset.labels, b.dataset.labels);
  EXPECT_EQ(a.dataset.p(), 2u);
  EXPECT_EQ(a.bayes_w(0), 0.0);
  EXPECT_EQ(a.bayes_w.tail(2), a.direction);
  spec.seed = 8;
  EXPECT_NE(generate(spec).dataset.features, a.dataset.features);
}

TEST(Generate, PrefixStable) {
  // Per-point streams: a larger sample extends a smaller one.
  auto a = generate({OutlierClass::Spread, 5, 3, 0.5, 1});
  auto b = generate({OutlierClass::Spread, 9, 3, 0.5, 1});
  EXPECT_EQ(a.dataset.features, b.dataset.features.topRows(5));
}

TEST(Generate, CentroidsOneUnitApart) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto g = generate({OutlierClass::None, 1, 1 + s % 5, 0.3, s});
    const Vector alpha = 0.5 * g.direction / g.direction.norm();
    EXPECT_NEAR((alpha - (-alpha)).norm(), 1.0, 1e-15);
    EXPECT_LE(g.direction.cwiseAbs().maxCoeff(), 1.0);
  }
}

TEST(Generate, ClassConditionalMeans) {
  const std::size_t n = 100000;
  const double sigma = 0.5;
  auto g = generate({OutlierClass::None, n, 3, sigma, 42});
  const Vector alpha = 0.5 * g.direction / g.direction.norm();
  Vector mp = Vector::Zero(3), mm = Vector::Zero(3);
  double np = 0, nm = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vector row = g.dataset.features.row(static_cast<Eigen::Index>(i)).transpose();
    if (g.dataset.labels[i] > 0) mp += row, ++np;
    else mm += row, ++nm;
  }
  const double tol = 3 * sigma / std::sqrt(n / 2.0);
  EXPECT_LE((mp / np - alpha).cwiseAbs().maxCoeff(), tol);
  EXPECT_LE((mm / nm + alpha).cwiseAbs().maxCoeff(), tol);
}

TEST(Generate, ClusteredOutlierFraction) {
  const std::size_t n = 100000;
  auto g = generate({OutlierClass::Clustered, n, 2, 0.5, 3});
  const Vector far = -10.0 * 0.5 * g.direction / g.direction.norm();
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vector row = g.dataset.features.row(static_cast<Eigen::Index>(i)).transpose();
    if (g.dataset.labels[i] > 0 && (row - far).norm() < 1.0) ++count;
  }
  EXPECT_NEAR(static_cast<double>(count) / n, 0.10, 0.01);
}

TEST(Generate, SpreadComponentFractions) {
  const std::size_t n = 100000;
  auto g = generate({OutlierClass::Spread, n, 2, 0.1, 5});
  const Vector alpha = 0.5 * g.direction / g.direction.norm();
  std::size_t wide = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vector row = g.dataset.features.row(static_cast<Eigen::Index>(i)).transpose();
    if ((row - g.dataset.labels[i] * alpha).norm() > 0.6) ++wide;  // 6 sigma for the tight component
  }
  // Wide components: 10% of points, of which exp(-0.18) stay outside radius 0.6.
  EXPECT_NEAR(static_cast<double>(wide) / n, 0.10 * std::exp(-0.18), 0.01);
}

TEST(Generate, RejectsBadSpecs) {
  EXPECT_THROW(generate({OutlierClass::None, 0, 2, 0.5, 1}), Error);
  EXPECT_THROW(generate({OutlierClass::None, 3, 2, 0.0, 1}), Error);
  EXPECT_THROW(sample_points(OutlierClass::None, Vector::Zero(2), 3, 1.0, 1), Error);
}

TEST(FlipLabels, Cases) {
  auto g = generate({OutlierClass::None, 100000, 1, 0.5, 9});
  auto same = flip_labels(g.dataset, 0.0, 4);
  EXPECT_EQ(same.labels, g.dataset.labels);
  auto f = flip_labels(g.dataset, 0.3, 4);
  std::size_t flipped = 0;
  for (std::size_t i = 0; i < f.n(); ++i) flipped += f.labels[i] != g.dataset.labels[i];
  EXPECT_NEAR(static_cast<double>(flipped) / f.n(), 0.3, 0.01);
  EXPECT_EQ(flip_labels(f, 0.3, 4).labels, g.dataset.labels);
  EXPECT_THROW(flip_labels(g.dataset, 0.5, 1), Error);
  EXPECT_THROW(flip_labels(g.dataset, -0.1, 1), Error);
}

TEST(Split, SizesAndPartition) {
  auto g = generate({OutlierClass::None, 100, 2, 0.5, 1});
  auto s = split(g.dataset, 0.35, 0.35, 0.30, 2);
  EXPECT_EQ(s.train.n(), 35u);
  EXPECT_EQ(s.validation.n(), 35u);
  EXPECT_EQ(s.test.n(), 30u);
  std::set<std::size_t> all(s.train_idx.begin(), s.train_idx.end());
  all.insert(s.validation_idx.begin(), s.validation_idx.end());
  all.insert(s.test_idx.begin(), s.test_idx.end());
  EXPECT_EQ(all.size(), 100u);

  auto ten = generate({OutlierClass::None, 10, 2, 0.5, 1});
  auto t = split(ten.dataset, 0.5, 0.25, 0.25, 3);
  EXPECT_EQ(t.train.n(), 6u);
  EXPECT_EQ(t.validation.n(), 2u);
  EXPECT_EQ(t.test.n(), 2u);
  EXPECT_EQ(split(ten.dataset, 0.5, 0.25, 0.25, 3).train_idx, t.train_idx);
  EXPECT_THROW(split(ten.dataset, 0.5, 0.5, 0.1, 3), Error);
  EXPECT_THROW(split(ten.dataset, 1.0, 0.0, 0.0, 3), Error);
}

TEST(Csv, RoundTrip) {
  auto g = generate({OutlierClass::Spread, 2, 3, 0.5, 1});
  const auto path = (std::filesystem::temp_directory_path() / "rankone_rt.csv").string();
  save_csv(g.dataset, path);
  auto back = load_csv(path);
  EXPECT_EQ(back.features, g.dataset.features);
  EXPECT_EQ(back.labels, g.dataset.labels);
  EXPECT_EQ(to_csv(back), read_file(path));
  std::remove(path.c_str());
}

TEST(Csv, LabelsAndErrors) {
  auto ds = parse_csv("label,f1\n0,1.5\n1,2\n");
  EXPECT_EQ(ds.labels, (std::vector<double>{-1, 1}));
  EXPECT_EQ(ds.p(), 1u);
  try {
    parse_csv("label,f1,f2\n1,1,2\n-1,3\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
    EXPECT_NE(std::string(e.what()).find("row 3"), std::string::npos);
  }
  try {
    parse_csv("label,f1\n2,1\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::LabelDomainError);
  }
  EXPECT_THROW(parse_csv("y,f1\n1,1\n"), Error);
  EXPECT_THROW(parse_csv("label,f1\n1,abc\n"), Error);
  EXPECT_THROW(load_csv("/nonexistent/x.csv"), Error);
}

TEST(Sidecar, SpecRoundTrip) {
  GenSpec s{OutlierClass::Clustered, 12, 3, 0.25, 99};
  auto g = generate(s);
  auto j = sidecar_json(g);
  auto back = gen_spec_from_json(j.at("spec"));
  EXPECT_EQ(back.n, 12u);
  EXPECT_EQ(back.outlier_class, OutlierClass::Clustered);
  EXPECT_EQ(back.seed, 99u);
  EXPECT_EQ(j.at("bayes_w").size(), 4u);
  EXPECT_THROW(gen_spec_from_json(nlohmann::json::object()), Error);
}
