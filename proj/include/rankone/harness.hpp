#pragma once

// Experiment drivers: relaxation bounds against the exact oracle, and
// cross-validated model selection. Work items run on a small thread pool and
// are merged by task index, so outputs do not depend on the thread count.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "rankone/datagen.hpp"
#include "rankone/mps.hpp"
#include "rankone/oracle.hpp"
#include "rankone/relaxations.hpp"
#include "rankone/solver.hpp"
#include "rankone/svm.hpp"

namespace rankone {

struct GapResult {
  double value = 0.0;
  bool anomaly = false;  // relaxation above the reference beyond 1e-6
};

/// (ref - relax) / ref.
inline GapResult gap(double zeta_ref, double zeta_relax) {
  if (!(zeta_ref > 0)) throw Error(ErrorCode::UndefinedGap, "gap needs a positive reference, got " + format_double(zeta_ref));
  GapResult g;
  g.value = (zeta_ref - zeta_relax) / zeta_ref;
  g.anomaly = g.value < -1e-6;
  return g;
}

/// lambda_j = beta_j / (1 - beta_j), beta_j = j / (G + 1), j = 1..G.
inline std::vector<double> lambda_grid(std::size_t G) {
  std::vector<double> out;
  for (std::size_t j = 1; j <= G; ++j) {
    const double beta = static_cast<double>(j) / static_cast<double>(G + 1);
    out.push_back(beta / (1.0 - beta));
  }
  return out;
}

/// k_j = j (n / 2) / (G + 1), j = 1..G.
inline std::vector<double> k_grid(std::size_t n, std::size_t G) {
  std::vector<double> out;
  for (std::size_t j = 1; j <= G; ++j) {
    out.push_back(static_cast<double>(j) * (static_cast<double>(n) / 2.0) / static_cast<double>(G + 1));
  }
  return out;
}

/// Runs fn(0..count-1) on `threads` workers. Each index runs exactly once;
/// callers write results into slot i, so the merge order is fixed.
inline void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

struct ExperimentConfig {
  std::vector<std::string> methods;
  std::size_t grid_size = 100;
  OutlierClass outlier_class = OutlierClass::None;
  std::size_t n = 12;
  std::size_t p = 2;
  double sigma = 0.5;
  double k = 2;                 // bound experiment budget
  std::size_t n_test = 10000;   // cv test sample
  std::string csv_path;         // dataset source instead of the generator
  double tau = 0.0;             // label flips on train/validation for CSV sources
  std::size_t replications = 1;
  std::uint64_t seed = 1;
  std::string out_dir;
  double big_m = kDefaultBigM;
  SolverConfig solver;
  std::size_t threads = 1;

  void check() const {
    if (grid_size < 1) throw Error(ErrorCode::InvalidSpec, "grid_size must be at least 1");
    if (methods.empty()) throw Error(ErrorCode::InvalidSpec, "at least one method is required");
    if (replications < 1) throw Error(ErrorCode::InvalidSpec, "replications must be at least 1");
  }
};

inline std::uint64_t replication_seed(std::uint64_t seed, std::size_t r) { return substream_seed(seed, 1000 + r); }

// ---------------------------------------------------------------------------
// Bound experiment
// ---------------------------------------------------------------------------

struct BenchRow {
  std::size_t instance = 0;
  std::string method;
  std::optional<double> bound;
  double time_s = 0.0;
  std::optional<double> gap;
  bool gap_anomaly = false;
  std::string status;
  std::string note;
};

inline const std::vector<std::string>& bound_methods() {
  static const std::vector<std::string> m{"exact", "conic1", "conic2", "decomposition", "bigm", "bigm-export"};
  return m;
}

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline SvmDataset bound_instance(const ExperimentConfig& cfg, std::size_t r) {
  if (!cfg.csv_path.empty()) return load_csv(cfg.csv_path);
  GenSpec spec{cfg.outlier_class, cfg.n, cfg.p, cfg.sigma, replication_seed(cfg.seed, r)};
  return generate(spec).dataset;
}

inline void check_methods(const std::vector<std::string>& methods, const std::vector<std::string>& allowed) {
  for (const auto& m : methods) {
    if (std::find(allowed.begin(), allowed.end(), m) == allowed.end()) {
      throw Error(ErrorCode::InvalidSpec, "unsupported method '" + m + "'");
    }
  }
}

}  // namespace detail

/// Lower bounds from each relaxation against the exact cardinality oracle.
inline std::vector<BenchRow> run_bound_experiment(const ExperimentConfig& cfg) {
  cfg.check();
  detail::check_methods(cfg.methods, bound_methods());
  const std::size_t reps = cfg.csv_path.empty() ? cfg.replications : 1;
  const SvmMode mode = SvmMode::cardinality(cfg.k);
  std::vector<std::vector<BenchRow>> per(reps);

  parallel_for(reps, cfg.threads, [&](std::size_t r) {
    const SvmDataset ds = detail::bound_instance(cfg, r);
    std::optional<ExactSvmResult> exact;
    double exact_time = 0.0;
    std::string exact_status = "skipped";
    try {
      const auto t0 = std::chrono::steady_clock::now();
      exact = exact_01_svm(ds, mode, cfg.solver);
      exact_time = detail::seconds_since(t0);
      exact_status = exact->feasible ? "optimal" : "infeasible";
    } catch (const Error& e) {
      exact_status = "error:" + std::string(to_string(e.code()));
    }

    for (const auto& m : cfg.methods) {
      BenchRow row;
      row.instance = r;
      row.method = m;
      try {
        if (m == "exact") {
          row.status = exact_status;
          row.time_s = exact_time;
          if (exact && exact->feasible) row.bound = exact->objective;
        } else if (m == "bigm-export") {
          if (cfg.out_dir.empty()) {
            row.status = "skipped";
            row.note = "no output directory";
          } else {
            std::filesystem::create_directories(cfg.out_dir);
            const auto path = (std::filesystem::path(cfg.out_dir) / ("bigm_" + std::to_string(r) + ".mps")).string();
            write_file(path, export_mps(build_bigm_model(ds, cfg.big_m, mode)));
            row.status = "exported";
            row.note = path;
          }
        } else {
          ConicProgram prog;
          if (m == "conic1") prog = build_conic_relaxation(ds, singletons(ds.n()), mode);
          else if (m == "conic2") prog = build_conic_relaxation(ds, all_pairs(ds.n()), mode);
          else if (m == "decomposition") prog = build_decomposition_relaxation(ds, boundary_decomposition(ds), mode);
          else prog = build_bigm_model(ds, cfg.big_m, mode);
          const auto t0 = std::chrono::steady_clock::now();
          const Solution sol = solve(prog, cfg.solver);
          row.time_s = detail::seconds_since(t0);
          row.status = to_string(sol.status);
          if (sol.status == SolveStatus::Optimal) row.bound = sol.objective;
        }
      } catch (const Error& e) {
        row.status = "error:" + std::string(to_string(e.code()));
        row.note = e.what();
      }
      if (row.bound && exact && exact->feasible && exact->objective > 0) {
        const GapResult g = gap(exact->objective, *row.bound);
        row.gap = g.value;
        row.gap_anomaly = g.anomaly;
      }
      per[r].push_back(std::move(row));
    }
  });

  std::vector<BenchRow> rows;
  for (auto& v : per) {
    for (auto& row : v) rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Cross-validation
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& cv_methods() {
  static const std::vector<std::string> m{"hinge", "robust-l1", "conic1", "conic2", "hinge+conic1", "bayes"};
  return m;
}

struct CvCandidate {
  std::string method;  // base method actually trained
  std::string hyper_name;
  double hyper = 0.0;
};

struct CvRow {
  std::size_t replication = 0;
  std::string method;
  std::string hyper_name;
  double hyper = 0.0;
  std::size_t hyper_index = 0;
  std::size_t validation_errors = 0;
  double train_rate = 0.0;
  double validation_rate = 0.0;
  double test_rate = 0.0;
  double w_norm = 0.0;
  std::size_t candidates = 0;
  std::size_t failed = 0;
  double time_s = 0.0;
  std::string status;
  Vector w;
};

struct CvSplit {
  SvmDataset train, validation, test;
  std::optional<Vector> bayes_w;
};

/// Candidate list of a method in grid order.
inline std::vector<CvCandidate> cv_candidates(const std::string& method, std::size_t n_train, std::size_t G) {
  std::vector<CvCandidate> out;
  auto add_lambda = [&](const std::string& base, std::size_t count) {
    for (double l : lambda_grid(count)) out.push_back({base, "lambda", l});
  };
  auto add_k = [&](const std::string& base, std::size_t count) {
    for (double k : k_grid(n_train, count)) out.push_back({base, "k", k});
  };
  if (method == "hinge" || method == "robust-l1") add_lambda(method, G);
  else if (method == "conic1" || method == "conic2") add_k(method, G);
  else if (method == "hinge+conic1") {
    add_lambda("hinge", std::max<std::size_t>(1, G / 2));
    if (G > 1) add_k("conic1", G - G / 2);
  } else if (method == "bayes") {
    out.push_back({"bayes", "none", 0.0});
  } else {
    throw Error(ErrorCode::InvalidSpec, "unsupported cv method '" + method + "'");
  }
  return out;
}

inline CvSplit cv_split(const ExperimentConfig& cfg, std::size_t r) {
  const std::uint64_t seed = replication_seed(cfg.seed, r);
  CvSplit s;
  if (!cfg.csv_path.empty()) {
    const SplitResult parts = split(load_csv(cfg.csv_path), 0.35, 0.35, 0.30, seed);
    s.train = flip_labels(parts.train, cfg.tau, substream_seed(seed, 1));
    s.validation = flip_labels(parts.validation, cfg.tau, substream_seed(seed, 2));
    s.test = parts.test;
    return s;
  }
  GenSpec spec{cfg.outlier_class, cfg.n, cfg.p, cfg.sigma, seed};
  spec.check();
  const Vector d = draw_direction(cfg.p, seed);
  s.train = sample_points(cfg.outlier_class, d, cfg.n, cfg.sigma, substream_seed(seed, 1));
  s.validation = sample_points(cfg.outlier_class, d, cfg.n, cfg.sigma, substream_seed(seed, 2));
  s.test = sample_points(OutlierClass::None, d, cfg.n_test, cfg.sigma, substream_seed(seed, 3));
  Vector bw = Vector::Zero(d.size() + 1);
  bw.tail(d.size()) = d;
  s.bayes_w = bw;
  return s;
}

/// Trains one candidate; returns nullopt when the solve is not optimal.
inline std::optional<Vector> train_candidate(const CvCandidate& c, const CvSplit& s, const SolverConfig& cfg) {
  if (c.method == "bayes") {
    if (!s.bayes_w) throw Error(ErrorCode::InvalidSpec, "bayes needs a generated dataset");
    return *s.bayes_w;
  }
  ConicProgram prog;
  if (c.method == "hinge") prog = build_hinge(s.train, c.hyper);
  else if (c.method == "robust-l1") prog = build_robust_l1(s.train, c.hyper);
  else if (c.method == "conic1") prog = build_conic_relaxation(s.train, singletons(s.train.n()), SvmMode::cardinality(c.hyper));
  else if (c.method == "conic2") prog = build_conic_relaxation(s.train, all_pairs(s.train.n()), SvmMode::cardinality(c.hyper));
  else throw Error(ErrorCode::InvalidSpec, "unsupported method '" + c.method + "'");
  const Solution sol = solve(prog, cfg);
  if (sol.status != SolveStatus::Optimal) return std::nullopt;
  return extract_estimator(sol, prog).w;
}

/// Model selection per replication and method: fewest validation errors,
/// then smaller ||w||, then smaller grid index.
inline std::vector<CvRow> run_cv(const ExperimentConfig& cfg) {
  cfg.check();
  detail::check_methods(cfg.methods, cv_methods());
  const std::size_t reps = cfg.replications;
  std::vector<CvSplit> splits(reps);
  parallel_for(reps, cfg.threads, [&](std::size_t r) { splits[r] = cv_split(cfg, r); });

  struct Task {
    std::size_t rep, method, cand;
  };
  std::vector<std::vector<std::vector<CvCandidate>>> cands(reps);
  std::vector<Task> tasks;
  for (std::size_t r = 0; r < reps; ++r) {
    for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
      cands[r].push_back(cv_candidates(cfg.methods[m], splits[r].train.n(), cfg.grid_size));
      for (std::size_t c = 0; c < cands[r][m].size(); ++c) tasks.push_back({r, m, c});
    }
  }
  struct Outcome {
    std::optional<Vector> w;
    double time_s = 0.0;
  };
  std::vector<Outcome> outcomes(tasks.size());
  parallel_for(tasks.size(), cfg.threads, [&](std::size_t t) {
    const Task& task = tasks[t];
    const auto t0 = std::chrono::steady_clock::now();
    try {
      outcomes[t].w = train_candidate(cands[task.rep][task.method][task.cand], splits[task.rep], cfg.solver);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::StatusNotOptimal) throw;
    }
    outcomes[t].time_s = detail::seconds_since(t0);
  });

  std::vector<CvRow> rows;
  std::size_t t = 0;
  for (std::size_t r = 0; r < reps; ++r) {
    const CvSplit& s = splits[r];
    for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
      CvRow row;
      row.replication = r;
      row.method = cfg.methods[m];
      row.candidates = cands[r][m].size();
      bool have = false;
      for (std::size_t c = 0; c < cands[r][m].size(); ++c, ++t) {
        const Outcome& o = outcomes[t];
        row.time_s += o.time_s;
        if (!o.w) {
          ++row.failed;
          continue;
        }
        const Vector& w = *o.w;
        const std::size_t errs = static_cast<std::size_t>(std::lround(misclassification_rate(w, s.validation) *
                                                                      static_cast<double>(s.validation.n())));
        const double norm = w.norm();
        if (!have || errs < row.validation_errors || (errs == row.validation_errors && norm < row.w_norm)) {
          have = true;
          row.validation_errors = errs;
          row.w_norm = norm;
          row.hyper_index = c;
          row.hyper_name = cands[r][m][c].method == row.method ? cands[r][m][c].hyper_name
                                                                 : cands[r][m][c].method + ":" + cands[r][m][c].hyper_name;
          row.hyper = cands[r][m][c].hyper;
          row.w = w;
        }
      }
      if (have) {
        row.status = "ok";
        row.train_rate = misclassification_rate(row.w, s.train);
        row.validation_rate = misclassification_rate(row.w, s.validation);
        row.test_rate = misclassification_rate(row.w, s.test);
      } else {
        row.status = "failed";
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

struct OutputOptions {
  bool timestamp = true;
  bool timing = false;  // wall-time column; off keeps reruns byte-identical
};

namespace detail {

inline std::string timestamp_line() {
  const std::time_t now = std::time(nullptr);
  char buf[64];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return std::string("# generated ") + buf + "\n";
}

inline std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

inline std::string fixed(double v, int digits) {
  std::ostringstream ss;
  ss.setf(std::ios::fixed);
  ss.precision(digits);
  ss << v;
  return ss.str();
}

}  // namespace detail

inline std::string bench_csv(const std::vector<BenchRow>& rows, const OutputOptions& o = {}) {
  std::string out = o.timestamp ? detail::timestamp_line() : "";
  out += "instance,method,bound,gap,gap_anomaly,status,note";
  if (o.timing) out += ",time_s";
  out += '\n';
  for (const auto& r : rows) {
    out += std::to_string(r.instance) + ',' + r.method + ',' + detail::opt(r.bound) + ',' + detail::opt(r.gap) + ',' +
           (r.gap_anomaly ? "1" : "0") + ',' + r.status + ',' + r.note;
    if (o.timing) out += ',' + format_double(r.time_s);
    out += '\n';
  }
  return out;
}

inline std::string cv_csv(const std::vector<CvRow>& rows, const OutputOptions& o = {}) {
  std::string out = o.timestamp ? detail::timestamp_line() : "";
  out += "replication,method,hyper_name,hyper,hyper_index,validation_errors,train_rate,validation_rate,test_rate,w_norm,"
         "candidates,failed,status";
  if (o.timing) out += ",time_s";
  out += '\n';
  for (const auto& r : rows) {
    out += std::to_string(r.replication) + ',' + r.method + ',' + r.hyper_name + ',' + format_double(r.hyper) + ',' +
           std::to_string(r.hyper_index) + ',' + std::to_string(r.validation_errors) + ',' + format_double(r.train_rate) +
           ',' + format_double(r.validation_rate) + ',' + format_double(r.test_rate) + ',' + format_double(r.w_norm) +
           ',' + std::to_string(r.candidates) + ',' + std::to_string(r.failed) + ',' + r.status;
    if (o.timing) out += ',' + format_double(r.time_s);
    out += '\n';
  }
  return out;
}

struct MethodSummary {
  std::string method;
  std::size_t count = 0;
  double mean = 0.0;
  double stddev = 0.0;
  double mean_gap = 0.0;
  std::size_t gap_count = 0;
  double time_s = 0.0;
};

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

inline double stddev_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

/// Mean and sample standard deviation of test rates per method, in the order
/// methods first appear.
inline std::vector<MethodSummary> summarize(const std::vector<CvRow>& rows) {
  std::vector<MethodSummary> out;
  std::map<std::string, std::vector<double>> rates;
  for (const auto& r : rows) {
    if (rates.find(r.method) == rates.end()) out.push_back({r.method});
    if (r.status == "ok") rates[r.method].push_back(r.test_rate);
    else rates[r.method];
    for (auto& s : out) {
      if (s.method == r.method) s.time_s += r.time_s;
    }
  }
  for (auto& s : out) {
    s.count = rates[s.method].size();
    s.mean = mean_of(rates[s.method]);
    s.stddev = stddev_of(rates[s.method]);
  }
  return out;
}

inline std::vector<MethodSummary> summarize(const std::vector<BenchRow>& rows) {
  std::vector<MethodSummary> out;
  std::map<std::string, std::vector<double>> gaps;
  for (const auto& r : rows) {
    auto it = std::find_if(out.begin(), out.end(), [&](const MethodSummary& s) { return s.method == r.method; });
    if (it == out.end()) {
      out.push_back({r.method});
      it = out.end() - 1;
    }
    if (r.bound) ++it->count;
    it->time_s += r.time_s;
    if (r.gap) gaps[r.method].push_back(*r.gap);
  }
  for (auto& s : out) {
    s.gap_count = gaps[s.method].size();
    s.mean_gap = mean_of(gaps[s.method]);
  }
  return out;
}

inline std::string cv_markdown(const std::vector<CvRow>& rows, bool timing = false) {
  std::string out = "| method | replications | test misclassification | std |";
  out += timing ? " cv time (s) |\n|---|---|---|---|---|\n" : "\n|---|---|---|---|\n";
  for (const auto& s : summarize(rows)) {
    out += "| " + s.method + " | " + std::to_string(s.count) + " | " + detail::fixed(100 * s.mean, 1) + "% | " +
           detail::fixed(100 * s.stddev, 1) + "% |";
    if (timing) out += " " + detail::fixed(s.time_s, 2) + " |";
    out += '\n';
  }
  return out;
}

inline std::string bench_markdown(const std::vector<BenchRow>& rows, bool timing = false) {
  std::string out = "| method | bounds | mean gap | gaps |";
  out += timing ? " time (s) |\n|---|---|---|---|---|\n" : "\n|---|---|---|---|\n";
  for (const auto& s : summarize(rows)) {
    out += "| " + s.method + " | " + std::to_string(s.count) + " | " +
           (s.gap_count ? detail::fixed(100 * s.mean_gap, 1) + "%" : std::string("-")) + " | " +
           std::to_string(s.gap_count) + " |";
    if (timing) out += " " + detail::fixed(s.time_s, 2) + " |";
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// SVG figures
// ---------------------------------------------------------------------------

/// Scatter of a 2-feature dataset with the lines a'w = 0 of each estimator.
inline std::string scatter_svg(const SvmDataset& ds, const std::vector<std::pair<std::string, Vector>>& lines,
                               double half_width = 3.0) {
  if (ds.p() != 2) throw Error(ErrorCode::DimensionMismatch, "scatter plots need exactly two features");
  const double size = 400.0;
  auto px = [&](double v) { return (v + half_width) / (2 * half_width) * size; };
  auto py = [&](double v) { return size - (v + half_width) / (2 * half_width) * size; };
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t i = 0; i < ds.n(); ++i) {
    const double x = ds.features(static_cast<Eigen::Index>(i), 0);
    const double y = ds.features(static_cast<Eigen::Index>(i), 1);
    if (std::abs(x) > half_width || std::abs(y) > half_width) continue;
    s << "<circle cx=\"" << detail::fixed(px(x), 2) << "\" cy=\"" << detail::fixed(py(y), 2) << "\" r=\"2.5\" fill=\""
      << (ds.labels[i] > 0 ? "#1f77b4" : "#d62728") << "\"/>\n";
  }
  const char* colors[] = {"black", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  std::size_t ci = 0;
  for (const auto& [name, w] : lines) {
    if (w.size() != 3) throw Error(ErrorCode::DimensionMismatch, "line needs (intercept, w1, w2)");
    const char* col = colors[ci++ % 5];
    // w0 + w1 x + w2 y = 0 clipped to the square.
    double x0 = -half_width, x1 = half_width, y0, y1;
    if (std::abs(w(2)) > 1e-12) {
      y0 = -(w(0) + w(1) * x0) / w(2);
      y1 = -(w(0) + w(1) * x1) / w(2);
    } else if (std::abs(w(1)) > 1e-12) {
      x0 = x1 = -w(0) / w(1);
      y0 = -half_width;
      y1 = half_width;
    } else {
      continue;
    }
    s << "<line x1=\"" << detail::fixed(px(x0), 2) << "\" y1=\"" << detail::fixed(py(y0), 2) << "\" x2=\""
      << detail::fixed(px(x1), 2) << "\" y2=\"" << detail::fixed(py(y1), 2) << "\" stroke=\"" << col
      << "\" stroke-width=\"1.5\"/>\n";
    s << "<text x=\"8\" y=\"" << 16 * ci << "\" font-size=\"12\" fill=\"" << col << "\">" << name << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

/// phi loss against the 0-1 and hinge losses on x = 1 - y a'w in [lo, hi].
inline std::string loss_curve_svg(const LossParams& lp, double lo = -1.0, double hi = 3.0) {
  const double W = 400.0, H = 300.0, ymax = std::max(2.0, lp.lambda * 1.5);
  auto px = [&](double x) { return (x - lo) / (hi - lo) * W; };
  auto py = [&](double y) { return H - std::min(y, ymax) / ymax * H; };
  auto path = [&](const std::function<double(double)>& f) {
    std::string d;
    for (int k = 0; k <= 200; ++k) {
      const double x = lo + (hi - lo) * k / 200.0;
      d += (k ? " L" : "M") + detail::fixed(px(x), 2) + " " + detail::fixed(py(f(x)), 2);
    }
    return d;
  };
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<path d=\"" << path([&](double x) { return x > 0 ? lp.lambda : 0.0; }) << "\" stroke=\"gray\" fill=\"none\"/>\n";
  s << "<path d=\"" << path([&](double x) { return std::max(0.0, x); }) << "\" stroke=\"#1f77b4\" fill=\"none\"/>\n";
  s << "<path d=\"" << path([&](double x) { return phi_loss(x, lp); }) << "\" stroke=\"#d62728\" stroke-width=\"2\" fill=\"none\"/>\n";
  s << "</svg>\n";
  return s.str();
}

}  // namespace rankone
