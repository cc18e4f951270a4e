#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rankone/rankone.hpp"

using namespace rankone;
namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitInvariant = 3;

struct Globals {
  std::uint64_t seed = 1;
  double tol = 1e-8;
  std::size_t threads = 1;
  std::string out;
};

/// Generator flags or a CSV path.
struct DataSource {
  std::string data;
  std::string cls = "none";
  std::size_t n = 12;
  std::size_t p = 2;
  double sigma = 0.5;

  void add_to(CLI::App* app) {
    app->add_option("--data", data, "Dataset CSV (overrides the generator flags)");
    app->add_option("--class", cls, "Outlier class: none|clustered|spread");
    app->add_option("--n", n, "Number of points");
    app->add_option("--p", p, "Number of features");
    app->add_option("--sigma", sigma, "Noise level");
  }

  SvmDataset load(std::uint64_t seed) const {
    if (!data.empty()) return load_csv(data);
    return generate({parse_outlier_class(cls), n, p, sigma, seed}).dataset;
  }
};

void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
  write_file(path, text);
  std::cerr << "wrote " << path << "\n";
}

std::string join_path(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

/// RankOneSet plus point and objective, from a JSON file or flags.
struct HullInput {
  std::string file;
  std::vector<double> d, x, z, alpha, beta;
  double t = 0.0;
  double gamma = 1.0;
  std::string side = "two-sided";

  void add_to(CLI::App* app) {
    app->add_option("--input", file, "JSON with d, side, x, z, t, alpha, beta, gamma");
    app->add_option("--d", d, "Direction d")->delimiter(',');
    app->add_option("--x", x, "Point x")->delimiter(',');
    app->add_option("--z", z, "Indicators z")->delimiter(',');
    app->add_option("--t", t, "Epigraph value t");
    app->add_option("--alpha", alpha, "Objective on x")->delimiter(',');
    app->add_option("--beta", beta, "Objective on z")->delimiter(',');
    app->add_option("--gamma", gamma, "Objective on t");
    app->add_option("--side", side, "two-sided|one-sided");
  }

  void resolve() {
    if (!file.empty()) {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(read_file(file));
        d = j.at("d").get<std::vector<double>>();
        x = j.value("x", x);
        z = j.value("z", z);
        t = j.value("t", t);
        alpha = j.value("alpha", alpha);
        beta = j.value("beta", beta);
        gamma = j.value("gamma", gamma);
        side = j.value("side", side);
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, file + ": " + e.what());
      }
    }
    if (d.empty()) throw Error(ErrorCode::InvalidSpec, "hull input needs d (--d or --input)");
  }

  RankOneSet set() const {
    if (side != "two-sided" && side != "one-sided") throw Error(ErrorCode::InvalidSpec, "side must be two-sided or one-sided");
    return RankOneSet(d, side == "one-sided" ? Sidedness::OneSided : Sidedness::TwoSided);
  }
};

ConicProgram build_named(const std::string& method, const SvmDataset& ds, std::optional<double> k,
                         std::optional<double> lambda, double big_m) {
  auto need_mode = [&]() {
    if (k && lambda) throw Error(ErrorCode::InvalidSpec, "give either --k or --lambda, not both");
    if (k) return SvmMode::cardinality(*k);
    if (lambda) return SvmMode::penalty(*lambda);
    throw Error(ErrorCode::InvalidSpec, method + " needs --k or --lambda");
  };
  auto need_lambda = [&]() {
    if (!lambda) throw Error(ErrorCode::InvalidSpec, method + " needs --lambda");
    return *lambda;
  };
  if (method == "hinge") return build_hinge(ds, need_lambda());
  if (method == "robust-l1") return build_robust_l1(ds, need_lambda());
  if (method == "conic1") return build_conic_relaxation(ds, singletons(ds.n()), need_mode());
  if (method == "conic2") return build_conic_relaxation(ds, all_pairs(ds.n()), need_mode());
  if (method == "decomposition") return build_decomposition_relaxation(ds, boundary_decomposition(ds), need_mode());
  if (method == "bigm") return build_bigm_model(ds, big_m, need_mode());
  throw Error(ErrorCode::InvalidSpec, "unknown method '" + method + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rankone: rank-one convexification and robust SVM relaxations"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--tol", g.tol, "Solver and membership tolerance");
  app.add_option("--threads", g.threads, "Worker threads");
  app.add_option("--out", g.out, "Output file or directory");

  // datagen
  auto* datagen = app.add_subcommand("datagen", "Generate a labeled instance (CSV + JSON sidecar)");
  DataSource gen;
  gen.add_to(datagen);
  std::string gen_name = "instance";
  bool gen_svg = false;
  datagen->add_option("--name", gen_name, "File stem");
  datagen->add_flag("--svg", gen_svg, "Also write a scatter plot (p = 2)");

  // train
  auto* train = app.add_subcommand("train", "Train one estimator and write it as JSON");
  DataSource train_src;
  train_src.add_to(train);
  std::string train_method = "conic1";
  std::optional<double> train_k, train_lambda;
  double big_m = kDefaultBigM;
  train->add_option("--method", train_method, "hinge|robust-l1|conic1|conic2|decomposition")->required();
  train->add_option("--k", train_k, "Misclassification budget");
  train->add_option("--lambda", train_lambda, "Per-point penalty");

  // bound
  auto* bound = app.add_subcommand("bound", "Relaxation bounds against the exact oracle");
  DataSource bound_src;
  bound_src.add_to(bound);
  std::vector<std::string> bound_list{"exact", "conic1", "conic2", "decomposition"};
  double bound_k = 2;
  std::size_t bound_reps = 5;
  bool no_timestamp = false, timing = false;
  bound->add_option("--methods", bound_list, "exact,conic1,conic2,decomposition,bigm,bigm-export")->delimiter(',');
  bound->add_option("--k", bound_k, "Misclassification budget");
  bound->add_option("--replications", bound_reps, "Seeded instances");
  bound->add_option("--big-m", big_m, "Big-M constant");
  bound->add_flag("--no-timestamp", no_timestamp, "Omit the timestamp header line");
  bound->add_flag("--timing", timing, "Add a wall-time column");

  // cv
  auto* cv = app.add_subcommand("cv", "Cross-validated model selection report");
  DataSource cv_src;
  cv_src.n = 100;
  cv_src.add_to(cv);
  std::vector<std::string> cv_list{"hinge", "conic1", "bayes"};
  std::size_t cv_grid = 100, cv_reps = 1, cv_test = 10000;
  double cv_tau = 0.0;
  cv->add_option("--methods", cv_list, "hinge,robust-l1,conic1,conic2,hinge+conic1,bayes")->delimiter(',');
  cv->add_option("--grid", cv_grid, "Hyperparameter grid size");
  cv->add_option("--replications", cv_reps, "Replications");
  cv->add_option("--n-test", cv_test, "Test sample size");
  cv->add_option("--tau", cv_tau, "Label flip rate for CSV sources");
  cv->add_flag("--no-timestamp", no_timestamp, "Omit the timestamp header line");
  cv->add_flag("--timing", timing, "Add a wall-time column");

  // hull
  auto* hull = app.add_subcommand("hull", "Rank-one hull utilities");
  hull->require_subcommand(1);
  HullInput hin;
  auto* hull_check = hull->add_subcommand("check", "Membership of (x, z, t)");
  auto* hull_rhs = hull->add_subcommand("rhs", "Right-hand side at (x, z)");
  auto* hull_socp = hull->add_subcommand("socp-export", "Write the hull program as CBF");
  for (auto* s : {hull_check, hull_rhs, hull_socp}) hin.add_to(s);

  // export
  auto* exporter = app.add_subcommand("export", "Write a formulation as CBF or MPS");
  DataSource ex_src;
  ex_src.add_to(exporter);
  std::string ex_format = "cbf", ex_method = "conic1";
  std::optional<double> ex_k, ex_lambda;
  exporter->add_option("--format", ex_format, "cbf|mps")->check(CLI::IsMember({"cbf", "mps"}));
  exporter->add_option("--method", ex_method, "hinge|robust-l1|conic1|conic2|decomposition|bigm");
  exporter->add_option("--k", ex_k, "Misclassification budget");
  exporter->add_option("--lambda", ex_lambda, "Per-point penalty");
  exporter->add_option("--big-m", big_m, "Big-M constant");

  // selftest
  auto* selftest = app.add_subcommand("selftest", "Run the invariant suites");
  bool full = false;
  std::string golden;
  selftest->add_flag("--full", full, "Acceptance-size suites");
  selftest->add_option("--golden", golden, "Directory with MPS golden files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  SolverConfig solver;
  solver.tolerance = g.tol;

  try {
    if (*datagen) {
      if (g.out.empty()) throw Error(ErrorCode::InvalidSpec, "datagen needs --out DIR");
      const GenSpec spec{parse_outlier_class(gen.cls), gen.n, gen.p, gen.sigma, g.seed};
      spec.check();
      const GeneratedInstance inst = generate(spec);
      fs::create_directories(g.out);
      emit(to_csv(inst.dataset), join_path(g.out, gen_name + ".csv"));
      emit(sidecar_json(inst).dump(2) + "\n", join_path(g.out, gen_name + ".json"));
      if (gen_svg) emit(scatter_svg(inst.dataset, {{"bayes", inst.bayes_w}}), join_path(g.out, gen_name + ".svg"));
      return 0;
    }

    if (*train) {
      const SvmDataset ds = train_src.load(g.seed);
      const ConicProgram prog = build_named(train_method, ds, train_k, train_lambda, big_m);
      const Solution sol = solve(prog, solver);
      Estimator est = extract_estimator(sol, prog);
      est.seed = g.seed;
      nlohmann::json j = to_json(est);
      j["train_rate"] = misclassification_rate(est, ds);
      emit(j.dump(2) + "\n", g.out);
      return 0;
    }

    if (*bound || *cv) {
      const DataSource& src = *bound ? bound_src : cv_src;
      ExperimentConfig cfg;
      cfg.outlier_class = parse_outlier_class(src.cls);
      cfg.n = src.n;
      cfg.p = src.p;
      cfg.sigma = src.sigma;
      cfg.csv_path = src.data;
      cfg.seed = g.seed;
      cfg.threads = g.threads;
      cfg.solver = solver;
      cfg.big_m = big_m;
      const OutputOptions oo{!no_timestamp, timing};
      if (*bound) {
        cfg.methods = bound_list;
        cfg.k = bound_k;
        cfg.replications = bound_reps;
        cfg.out_dir = g.out;
        const auto rows = run_bound_experiment(cfg);
        if (g.out.empty()) {
          std::cout << bench_csv(rows, oo);
        } else {
          emit(bench_csv(rows, oo), join_path(g.out, "bound.csv"));
          emit(bench_markdown(rows, timing), join_path(g.out, "bound.md"));
        }
        std::cerr << bench_markdown(rows, timing);
      } else {
        cfg.methods = cv_list;
        cfg.grid_size = cv_grid;
        cfg.replications = cv_reps;
        cfg.n_test = cv_test;
        cfg.tau = cv_tau;
        const auto rows = run_cv(cfg);
        if (g.out.empty()) {
          std::cout << cv_csv(rows, oo);
        } else {
          emit(cv_csv(rows, oo), join_path(g.out, "cv.csv"));
          emit(cv_markdown(rows, timing), join_path(g.out, "cv.md"));
        }
        std::cerr << cv_markdown(rows, timing);
      }
      return 0;
    }

    if (*hull) {
      hin.resolve();
      const RankOneSet set = hin.set();
      if (*hull_rhs) {
        std::cout << std::setprecision(12) << eval_rhs(set, hin.x, hin.z) << "\n";
      } else if (*hull_check) {
        const bool in = check_membership(set, {hin.x, hin.z, hin.t}, g.tol);
        nlohmann::json j{{"member", in}, {"rhs", eval_rhs(set, hin.x, hin.z)}, {"t", hin.t}};
        std::cout << j.dump() << "\n";
      } else {
        LinearObjective obj{hin.alpha, hin.beta, hin.gamma};
        if (obj.alpha.empty()) obj.alpha.assign(set.size(), 0.0);
        if (obj.beta.empty()) obj.beta.assign(set.size(), 0.0);
        emit(export_cbf(bounds_as_rows(hull_program(set, obj))), g.out);
      }
      return 0;
    }

    if (*exporter) {
      const SvmDataset ds = ex_src.load(g.seed);
      const ConicProgram prog = build_named(ex_method, ds, ex_k, ex_lambda, big_m);
      emit(ex_format == "cbf" ? export_cbf(bounds_as_rows(prog)) : export_mps(prog), g.out);
      return 0;
    }

    if (*selftest) {
      CheckSizes sz = full ? CheckSizes::full() : CheckSizes::quick();
      sz.threads = g.threads;
      bool ok = true;
      run_all_checks(sz, g.seed, golden, [&](const CheckResult& r) {
        std::cout << format_check(r) << std::endl;
        ok = ok && r.pass;
      });
      return ok ? 0 : kExitInvariant;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
