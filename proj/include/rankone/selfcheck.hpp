#pragma once

// Invariant suites shared by the acceptance binary and `rankone selftest`.
// Each check compares library results against an independent reference
// (enumeration, grids, closed forms) and reports PASS/FAIL with a summary.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "rankone/cbf.hpp"
#include "rankone/datagen.hpp"
#include "rankone/harness.hpp"
#include "rankone/hull.hpp"
#include "rankone/mps.hpp"
#include "rankone/oracle.hpp"
#include "rankone/relaxations.hpp"
#include "rankone/svm.hpp"

namespace rankone {

struct CheckResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

/// Sizes for each suite. `full()` matches the acceptance protocol.
struct CheckSizes {
  int hull_trials = 200;
  int one_sided_trials = 200;
  int phi_trials = 100;
  int validity_points = 1000;
  int equivalence_inputs = 1000;
  std::size_t equivalence_resolution = 100;
  int chain_instances = 50;
  int bigm_instances = 20;
  std::size_t stat_replications = 10;
  std::size_t stat_test_points = 10000;
  std::size_t stat_grid = 100;
  int format_programs = 20;
  std::size_t threads = 1;

  static CheckSizes full() { return {}; }
  static CheckSizes quick() {
    CheckSizes s;
    s.hull_trials = 40;
    s.one_sided_trials = 40;
    s.phi_trials = 30;
    s.validity_points = 100;
    s.equivalence_inputs = 100;
    s.chain_instances = 6;
    s.bigm_instances = 5;
    s.stat_replications = 3;
    s.stat_test_points = 2000;
    s.stat_grid = 20;
    s.format_programs = 5;
    return s;
  }
};

namespace check {

inline bool close_rel(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

inline std::vector<double> random_d(Rng& rng, std::size_t n, bool nonneg) {
  std::vector<double> d(n);
  for (auto& v : d) {
    const double mag = rng.uniform(0.2, 2.0);
    v = (nonneg || rng.uniform() < 0.5) ? mag : -mag;
  }
  return d;
}

inline void force_mixed_signs(std::vector<double>& d) {
  if (d.size() < 2) return;
  const bool all_pos = std::all_of(d.begin(), d.end(), [](double v) { return v > 0; });
  const bool all_neg = std::all_of(d.begin(), d.end(), [](double v) { return v < 0; });
  if (all_pos || all_neg) d[0] = -d[0];
}

/// alpha = eta d, gamma = 1, random beta. With `probe`, the objective is
/// made unbounded on purpose (gamma = -1 or alpha not proportional to d).
inline LinearObjective random_objective(Rng& rng, const RankOneSet& s, bool probe) {
  LinearObjective obj;
  const double eta = rng.uniform(-2.0, 2.0);
  const bool tilt = probe && rng.uniform() < 0.5;
  for (std::size_t i = 0; i < s.size(); ++i) {
    obj.alpha.push_back(eta * s.d[i] + (tilt && i == 0 ? rng.uniform(0.5, 1.0) : 0.0));
    obj.beta.push_back(rng.uniform(-1.0, 1.0));
  }
  obj.gamma = probe && !tilt ? -1.0 : 1.0;
  return obj;
}

inline CheckResult timed(int id, std::string name, const std::function<std::pair<bool, std::string>()>& body) {
  CheckResult r;
  r.id = id;
  r.name = std::move(name);
  const auto t0 = std::chrono::steady_clock::now();
  try {
    auto [ok, detail] = body();
    r.pass = ok;
    r.detail = std::move(detail);
  } catch (const std::exception& e) {
    r.pass = false;
    r.detail = std::string("exception: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

}  // namespace check

/// Two-sided relaxation optimum equals the enumeration optimum.
inline CheckResult check_hull_exactness(int trials, std::uint64_t seed) {
  return check::timed(1, "hull exactness (two-sided)", [&] {
    Rng rng(seed, 1);
    int bad = 0, unbounded = 0, probe_bad = 0;
    auto run = [&](std::size_t n, bool probe) {
      std::vector<double> d = check::random_d(rng, n, false);
      check::force_mixed_signs(d);
      const RankOneSet s(d);
      const auto obj = check::random_objective(rng, s, probe);
      const auto exact = exact_linear_opt(s, obj);
      const auto relax = optimize_over_hull(s, obj);
      if (exact.unbounded) ++unbounded;
      if (exact.unbounded != !relax.has_value() || (relax && !check::close_rel(*relax, exact.value, 1e-6))) {
        ++(probe ? probe_bad : bad);
      }
    };
    for (int t = 0; t < trials; ++t) run(2 + static_cast<std::size_t>(t % 5), false);
    const int probes = std::max(1, trials / 5);
    for (int t = 0; t < probes; ++t) run(2 + static_cast<std::size_t>(t % 5), true);
    return std::make_pair(bad == 0 && probe_bad == 0,
                          std::to_string(trials) + " trials + " + std::to_string(probes) + " unbounded probes, " +
                              std::to_string(unbounded) + " unbounded, " + std::to_string(bad + probe_bad) + " mismatches");
  });
}

/// One-sided: d >= 0 matches enumeration; mixed signs match enumeration and
/// the z-free optimum -eta^2/4 + sum min(beta, 0).
inline CheckResult check_one_sided(int trials, std::uint64_t seed) {
  return check::timed(2, "one-sided exactness", [&] {
    Rng rng(seed, 2);
    int bad = 0;
    for (int t = 0; t < trials; ++t) {
      const std::size_t n = 2 + static_cast<std::size_t>(t % 5);
      const bool nonneg = t % 2 == 0;
      std::vector<double> d = check::random_d(rng, n, nonneg);
      if (!nonneg) check::force_mixed_signs(d);
      const RankOneSet s(d, Sidedness::OneSided);
      LinearObjective obj;
      const double eta = rng.uniform(-2.0, 2.0);
      for (std::size_t i = 0; i < n; ++i) {
        obj.alpha.push_back(eta * s.d[i]);
        obj.beta.push_back(rng.uniform(-1.0, 1.0));
      }
      obj.gamma = 1.0;
      const auto exact = exact_linear_opt(s, obj);
      const auto relax = optimize_over_hull(s, obj);
      if (exact.unbounded || !relax) {
        ++bad;
        continue;
      }
      if (!check::close_rel(*relax, exact.value, 1e-6)) ++bad;
      if (!nonneg) {
        double zfree = -eta * eta / 4.0;
        for (double b : obj.beta) zfree += std::min(b, 0.0);
        if (!check::close_rel(*relax, zfree, 1e-6)) ++bad;
      }
    }
    return std::make_pair(bad == 0, std::to_string(trials) + " trials, " + std::to_string(bad) + " mismatches");
  });
}

/// phi against a z-grid of step 1e-4; the knee value equals lambda exactly.
inline CheckResult check_phi(int trials, std::uint64_t seed) {
  return check::timed(3, "phi loss closed form", [&] {
    Rng rng(seed, 3);
    double worst = 0.0;
    int knee_bad = 0;
    for (int t = 0; t < trials; ++t) {
      const double d = rng.uniform(0.05, 3.0);
      const double lambda = rng.uniform(0.05, 3.0);
      const double x = rng.uniform(-2.0, 3.0);
      double best = kInf;
      for (int k = 0; k <= 10000; ++k) {
        const double z = k * 1e-4;
        const double xp = std::max(x, 0.0), xm = std::min(x, 0.0);
        double v = lambda * z - d * x * x + d * xm * xm;
        if (xp > 0) v += z > 0 ? d * xp * xp / z : kInf;
        best = std::min(best, v);
      }
      worst = std::max(worst, std::abs(best - phi_loss(x, {d, lambda})));
      if (phi_loss(std::sqrt(lambda / d), {d, lambda}) != lambda) ++knee_bad;
    }
    return std::make_pair(worst <= 1e-4 && knee_bad == 0,
                          "max |grid - closed form| = " + format_double(worst) + ", knee mismatches " + std::to_string(knee_bad));
  });
}

/// Fixed-d inequality, hull inequality, subset copositive matrices and their
/// SDP extensions on random integer points.
inline CheckResult check_validity(int points, std::uint64_t seed) {
  return check::timed(4, "validity suites", [&] {
    Rng rng(seed, 4);
    std::size_t violations = 0, checks = 0;
    for (int t = 0; t < points; ++t) {
      const std::size_t n = 1 + static_cast<std::size_t>(rng.below(5));
      Vector x(static_cast<Eigen::Index>(n)), z(static_cast<Eigen::Index>(n));
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        z(i) = rng.uniform() < 0.5 ? 1.0 : 0.0;
        const double mag = rng.uniform() < 0.15 ? 0.0 : std::abs(rng.normal());
        x(i) = z(i) == 1.0 ? mag : -mag;
      }
      const auto pt = ExtendedPoint::rank_one(x, z);
      std::vector<double> d(n);
      for (auto& v : d) v = rng.uniform(0.0, 2.0);
      const Vector dv = to_vector(d);
      const double lhs = dv.dot(pt.X * dv);
      ++checks;
      if (lhs < fixed_d_rhs(pt, d) - 1e-8) ++violations;
      // hull inequality with t = (d'x)^2
      ++checks;
      if (!check_membership(RankOneSet(d), {to_std(x), to_std(z), lhs}, 1e-8)) ++violations;
      for (std::size_t mask = 1; mask < (std::size_t{1} << n); ++mask) {
        std::vector<std::size_t> S;
        for (std::size_t i = 0; i < n; ++i) {
          if (mask >> i & 1) S.push_back(i);
        }
        if (S.size() > 3) continue;
        for (auto side : {Sidedness::TwoSided, Sidedness::OneSided}) {
          const SubsetConstraintSpec spec{S, side};
          for (const auto& M : copositive_matrices_for_subset(pt, spec)) {
            ++checks;
            if (!grid_copositivity_check(M, 20, 1e-8).copositive) ++violations;
          }
          ++checks;
          if (sdp_extension_certificate(pt, spec) < -1e-8) ++violations;
        }
      }
    }
    return std::make_pair(violations == 0, std::to_string(points) + " points, " + std::to_string(checks) + " checks, " +
                                               std::to_string(violations) + " violations");
  });
}

/// Grid copositivity against the g/h semidefinite feasibility problem.
inline CheckResult check_equivalence(int inputs, std::size_t resolution, std::uint64_t seed) {
  return check::timed(5, "copositive/SDP equivalence", [&] {
    Rng rng(seed, 5);
    int agree = 0, far_disagree = 0, copositive = 0;
    for (int k = 0; k < inputs; ++k) {
      const std::size_t m = 1 + static_cast<std::size_t>(rng.below(2));  // matrix order 2 or 3
      Matrix B(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
      for (Eigen::Index i = 0; i < B.size(); ++i) B.data()[i] = rng.normal();
      const Matrix X = B * B.transpose();
      Vector x(static_cast<Eigen::Index>(m));
      for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = rng.normal();
      const double t = rng.uniform(0.0, 2.0);
      const auto rep = cp_sdp_equivalence_check(t, x, X, resolution);
      if (rep.copositive) ++copositive;
      if (rep.agree) ++agree;
      else if (!rep.near_boundary) ++far_disagree;
    }
    const double rate = static_cast<double>(agree) / inputs;
    return std::make_pair(rate >= 0.99 && far_disagree == 0,
                          std::to_string(agree) + "/" + std::to_string(inputs) + " agree, " +
                              std::to_string(far_disagree) + " disagreements beyond one grid cell, " +
                              std::to_string(copositive) + " copositive");
  });
}

/// decomposition <= conic1 <= exact and conic2 <= exact on seeded feasible
/// instances; infeasible cardinality instances are redrawn.
inline CheckResult check_bound_chain(int instances, std::uint64_t seed) {
  return check::timed(6, "bound dominance chain", [&] {
    int done = 0, bad = 0, skipped = 0;
    double worst_gap = 0.0;
    auto slack = [](double v) { return 1e-6 * std::max(1.0, std::abs(v)); };
    for (std::uint64_t s = 0; done < instances && s < static_cast<std::uint64_t>(instances) * 20; ++s) {
      const std::uint64_t inst = substream_seed(seed, 600 + s);
      const OutlierClass cls = static_cast<OutlierClass>(s % 3);
      const std::size_t n = 8 + static_cast<std::size_t>(s % 7);   // 8..14
      const std::size_t p = 2 + static_cast<std::size_t>(s % 2);   // p~ = 3 or 4
      const double k = 1.0 + static_cast<double>(s % 3);           // 1..3
      const double sigma = s % 2 ? 0.5 : 1.0;
      const SvmDataset ds = generate({cls, n, p, sigma, inst}).dataset;
      const SvmMode mode = SvmMode::cardinality(k);
      const auto exact = exact_01_svm(ds, mode);
      if (!exact.feasible || !(exact.objective > 0)) {
        ++skipped;
        continue;
      }
      ++done;
      const Solution c1 = solve(build_conic_relaxation(ds, singletons(n), mode));
      const Solution c2 = solve(build_conic_relaxation(ds, all_pairs(n), mode));
      const Solution dc = solve(build_decomposition_relaxation(ds, boundary_decomposition(ds), mode));
      if (c1.status != SolveStatus::Optimal || c2.status != SolveStatus::Optimal || dc.status != SolveStatus::Optimal) {
        ++bad;
        continue;
      }
      const double e = exact.objective;
      if (dc.objective > c1.objective + slack(c1.objective)) ++bad;
      if (c1.objective > e + slack(e)) ++bad;
      if (c2.objective > e + slack(e)) ++bad;
      for (double b : {c1.objective, c2.objective, dc.objective}) {
        const double g = gap(e, b).value;
        if (g < -1e-6 || g >= 1.0) ++bad;
        worst_gap = std::max(worst_gap, g);
      }
    }
    return std::make_pair(bad == 0 && done == instances,
                          std::to_string(done) + " feasible instances (" + std::to_string(skipped) +
                              " infeasible redrawn), " + std::to_string(bad) + " violations, max gap " +
                              format_double(worst_gap));
  });
}

/// Big-M relaxation value <= lambda n / M and equal to hinge with lambda / M.
inline CheckResult check_bigm(int instances, std::uint64_t seed) {
  return check::timed(7, "big-M triviality", [&] {
    int bad = 0;
    double worst = 0.0;
    for (int k = 0; k < instances; ++k) {
      const auto cls = static_cast<OutlierClass>(k % 3);
      const std::size_t n = 10 + static_cast<std::size_t>(k % 11);
      const SvmDataset ds = generate({cls, n, 1 + static_cast<std::size_t>(k % 4), 0.5 + 0.25 * (k % 3),
                                      substream_seed(seed, 700 + static_cast<std::uint64_t>(k))})
                                .dataset;
      const double lambda = 0.25 * (1 + k % 8);
      const double M = kDefaultBigM;
      const Solution relax = solve(build_bigm_model(ds, M, SvmMode::penalty(lambda)));
      const Solution hinge = solve(build_hinge(ds, lambda / M));
      if (relax.status != SolveStatus::Optimal || hinge.status != SolveStatus::Optimal) {
        ++bad;
        continue;
      }
      if (relax.objective > lambda * static_cast<double>(n) / M + 1e-8) ++bad;
      worst = std::max(worst, std::abs(relax.objective - hinge.objective));
      if (std::abs(relax.objective - hinge.objective) > 1e-5) ++bad;
    }
    return std::make_pair(bad == 0, std::to_string(instances) + " instances, " + std::to_string(bad) +
                                        " failures, max |bigm - hinge| = " + format_double(worst));
  });
}

/// Clustered outliers, sigma 0.2, n = 100, p = 2: conic1 beats hinge on
/// mean test error and the bayes rate is 0.6% +- 0.3%.
inline CheckResult check_statistical(std::size_t reps, std::size_t n_test, std::size_t grid, std::uint64_t seed,
                                     std::size_t threads) {
  return check::timed(8, "statistical check (clustered, sigma 0.2)", [&] {
    ExperimentConfig cfg;
    cfg.methods = {"hinge", "conic1", "bayes"};
    cfg.outlier_class = OutlierClass::Clustered;
    cfg.sigma = 0.2;
    cfg.n = 100;
    cfg.p = 2;
    cfg.n_test = n_test;
    cfg.grid_size = grid;
    cfg.replications = reps;
    cfg.seed = seed;
    cfg.threads = threads;
    const auto summary = summarize(run_cv(cfg));
    double hinge = 0, conic = 0, bayes = 0;
    std::size_t complete = 0;
    for (const auto& s : summary) {
      if (s.count == reps) ++complete;
      if (s.method == "hinge") hinge = s.mean;
      if (s.method == "conic1") conic = s.mean;
      if (s.method == "bayes") bayes = s.mean;
    }
    const bool ok = complete == 3 && conic <= hinge && std::abs(bayes - 0.006) <= 0.003;
    return std::make_pair(ok, "hinge " + detail::fixed(100 * hinge, 2) + "%, conic1 " + detail::fixed(100 * conic, 2) +
                                  "%, bayes " + detail::fixed(100 * bayes, 2) + "% over " + std::to_string(reps) +
                                  " replications");
  });
}

/// Fixed big-M models whose MPS text is kept as golden files.
inline std::vector<std::pair<std::string, ConicProgram>> golden_mps_cases() {
  std::vector<std::pair<std::string, ConicProgram>> out;
  Matrix f1(1, 1);
  f1 << 2;
  out.emplace_back("bigm_n1_p1.mps", build_bigm_model(SvmDataset(f1, {1}, false), 1000, SvmMode::penalty(0.5)));
  Matrix f3(3, 2);
  f3 << 1, 0.5, -0.25, 2, 0, -1;
  out.emplace_back("bigm_n3_card.mps", build_bigm_model(SvmDataset(f3, {1, -1, 1}, true), 1000, SvmMode::cardinality(1)));
  return out;
}

/// CBF round trips of random conic1 programs and byte-stable MPS goldens.
/// An empty `golden_dir` checks export determinism only.
inline CheckResult check_formats(int programs, std::uint64_t seed, const std::string& golden_dir) {
  return check::timed(9, "format round-trips", [&] {
    int bad = 0;
    double worst = 0.0;
    for (int k = 0; k < programs; ++k) {
      const std::size_t n = 3 + static_cast<std::size_t>(k % 6);
      const SvmDataset ds = generate({static_cast<OutlierClass>(k % 3), n, 1 + static_cast<std::size_t>(k % 3), 0.7,
                                      substream_seed(seed, 900 + static_cast<std::uint64_t>(k))})
                                .dataset;
      const SvmMode mode = k % 2 ? SvmMode::penalty(0.5 + k % 3) : SvmMode::cardinality(1 + k % 2);
      const ConicProgram p = build_conic_relaxation(ds, singletons(n), mode);
      const std::string text = export_cbf(p);
      const ConicProgram q = import_cbf(text);
      if (!structurally_equal(p, q, 1e-12) || export_cbf(q) != text) {
        ++bad;
        continue;
      }
      const Solution a = solve(p), b = solve(q);
      if (a.status != SolveStatus::Optimal || b.status != SolveStatus::Optimal) {
        ++bad;
        continue;
      }
      worst = std::max(worst, std::abs(a.objective - b.objective));
      if (std::abs(a.objective - b.objective) > 1e-6) ++bad;
    }
    int golden_bad = 0;
    for (const auto& [name, prog] : golden_mps_cases()) {
      const std::string text = export_mps(prog);
      if (export_mps(prog) != text) ++golden_bad;
      if (!golden_dir.empty() && read_file(golden_dir + "/" + name) != text) ++golden_bad;
    }
    return std::make_pair(bad == 0 && golden_bad == 0,
                          std::to_string(programs) + " CBF programs, " + std::to_string(bad) + " failures, max objective delta " +
                              format_double(worst) + "; MPS golden mismatches " + std::to_string(golden_bad) +
                              (golden_dir.empty() ? " (determinism only)" : ""));
  });
}

/// `cv` and `bound` CSVs are identical under 1 and 8 threads.
inline CheckResult check_determinism(std::uint64_t seed) {
  return check::timed(10, "determinism across threads", [&] {
    ExperimentConfig bound;
    bound.methods = {"exact", "conic1", "conic2", "decomposition"};
    bound.n = 10;
    bound.p = 2;
    bound.k = 2;
    bound.replications = 6;
    bound.seed = seed;
    ExperimentConfig cv;
    cv.methods = {"hinge", "robust-l1", "conic1", "hinge+conic1", "bayes"};
    cv.outlier_class = OutlierClass::Spread;
    cv.n = 30;
    cv.n_test = 2000;
    cv.grid_size = 10;
    cv.replications = 3;
    cv.seed = seed;
    const OutputOptions plain{false, false};
    std::string b1, b8, c1, c8;
    bound.threads = cv.threads = 1;
    b1 = bench_csv(run_bound_experiment(bound), plain);
    c1 = cv_csv(run_cv(cv), plain);
    bound.threads = cv.threads = 8;
    b8 = bench_csv(run_bound_experiment(bound), plain);
    c8 = cv_csv(run_cv(cv), plain);
    return std::make_pair(b1 == b8 && c1 == c8, std::string("bound CSV ") + (b1 == b8 ? "identical" : "differs") +
                                                   ", cv CSV " + (c1 == c8 ? "identical" : "differs"));
  });
}

inline std::vector<CheckResult> run_all_checks(const CheckSizes& sz, std::uint64_t seed, const std::string& golden_dir,
                                               const std::function<void(const CheckResult&)>& on_result = {}) {
  std::vector<std::function<CheckResult()>> suites{
      [&] { return check_hull_exactness(sz.hull_trials, seed); },
      [&] { return check_one_sided(sz.one_sided_trials, seed); },
      [&] { return check_phi(sz.phi_trials, seed); },
      [&] { return check_validity(sz.validity_points, seed); },
      [&] { return check_equivalence(sz.equivalence_inputs, sz.equivalence_resolution, seed); },
      [&] { return check_bound_chain(sz.chain_instances, seed); },
      [&] { return check_bigm(sz.bigm_instances, seed); },
      [&] { return check_statistical(sz.stat_replications, sz.stat_test_points, sz.stat_grid, seed, sz.threads); },
      [&] { return check_formats(sz.format_programs, seed, golden_dir); },
      [&] { return check_determinism(seed); },
  };
  std::vector<CheckResult> out;
  for (auto& s : suites) {
    out.push_back(s());
    if (on_result) on_result(out.back());
  }
  return out;
}

inline std::string format_check(const CheckResult& r) {
  return std::string(r.pass ? "PASS" : "FAIL") + " [" + std::to_string(r.id) + "] " + r.name + ": " + r.detail + " (" +
         detail::fixed(r.seconds, 1) + " s)";
}

}  // namespace rankone
