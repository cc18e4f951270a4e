#pragma once

// SVM formulations: conic relaxations over a subset collection, hinge and
// l1-robust baselines, the per-point decomposition relaxation, estimators
// and classification metrics.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "rankone/conic.hpp"
#include "rankone/dataset.hpp"
#include "rankone/error.hpp"
#include "rankone/hull.hpp"
#include "rankone/numeric.hpp"
#include "rankone/oracle.hpp"
#include "rankone/solver.hpp"

namespace rankone {

struct SubsetCollection {
  std::vector<std::vector<std::size_t>> subsets;
  std::string tag;

  std::size_t size() const { return subsets.size(); }
};

inline constexpr std::size_t kDefaultSubsetCap = 200000;

namespace detail {

inline void check_collection(const SubsetCollection& c, std::size_t n) {
  std::vector<std::vector<std::size_t>> seen;
  for (const auto& L : c.subsets) {
    if (L.empty()) throw Error(ErrorCode::InvalidSpec, "empty subset in collection");
    for (std::size_t k = 0; k < L.size(); ++k) {
      if (L[k] >= n) throw Error(ErrorCode::InvalidSpec, "subset index " + std::to_string(L[k]) + " out of range");
      if (k > 0 && L[k] <= L[k - 1]) throw Error(ErrorCode::InvalidSpec, "subset not sorted or has duplicates");
    }
  }
  auto sorted = c.subsets;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw Error(ErrorCode::InvalidSpec, "duplicate subset in collection");
  }
}

}  // namespace detail

/// All subsets of [n] with 1 <= |L| <= kappa, ordered by size then lexicographically.
inline SubsetCollection subsets_up_to(std::size_t n, std::size_t kappa, std::size_t cap = kDefaultSubsetCap) {
  if (kappa == 0) throw Error(ErrorCode::InvalidSpec, "kappa must be at least 1");
  double total = 0;
  for (std::size_t k = 1; k <= std::min(kappa, n); ++k) total += detail::binomial(n, k);
  if (total > static_cast<double>(cap)) {
    throw Error(ErrorCode::TooLarge, "subset collection would hold " + format_double(total) + " sets");
  }
  SubsetCollection c;
  c.tag = kappa == 1 ? "singletons" : "up-to-" + std::to_string(kappa);
  for (std::size_t k = 1; k <= std::min(kappa, n); ++k) {
    std::vector<std::size_t> S(k);
    for (std::size_t i = 0; i < k; ++i) S[i] = i;
    do {
      c.subsets.push_back(S);
    } while (detail::next_combination(S, n));
  }
  return c;
}

inline SubsetCollection singletons(std::size_t n) { return subsets_up_to(n, 1); }

/// The conic2 collection: every pair, no singletons.
inline SubsetCollection all_pairs(std::size_t n, std::size_t cap = kDefaultSubsetCap) {
  if (detail::binomial(n, 2) > static_cast<double>(cap)) throw Error(ErrorCode::TooLarge, "too many pairs");
  SubsetCollection c;
  c.tag = "pairs";
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) c.subsets.push_back({i, j});
  }
  return c;
}

// ---------------------------------------------------------------------------
// Builders
// ---------------------------------------------------------------------------

namespace detail {

inline AffineExpr linear_in(const std::vector<std::size_t>& w, const Vector& a, double scale = 1.0) {
  AffineExpr e;
  for (std::size_t j = 0; j < w.size(); ++j) {
    const double v = a(static_cast<Eigen::Index>(j));
    if (v != 0.0) e.add(w[j], scale * v);
  }
  return e;
}

/// Index of W_{jk} in the packed lower-triangle variable list.
inline std::size_t wmat_index(std::size_t p, std::size_t j, std::size_t k) {
  if (j < k) std::swap(j, k);
  return svec_index(p, j, k);
}

/// a' W b with W stored as its lower triangle.
inline AffineExpr bilinear_in(const std::vector<std::size_t>& W, std::size_t p, const Vector& a, const Vector& b) {
  AffineExpr e;
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t k = 0; k < p; ++k) {
      const double v = a(static_cast<Eigen::Index>(j)) * b(static_cast<Eigen::Index>(k));
      if (v != 0.0) e.add(W[wmat_index(p, j, k)], v);
    }
  }
  return e;
}

inline void tag_program(ProgramBuilder& b, const std::string& method, std::size_t p_tilde, std::size_t w_first,
                        bool split, const std::map<std::string, double>& hyper) {
  b.set_metadata("method", method);
  b.set_metadata("p_tilde", std::to_string(p_tilde));
  b.set_metadata("w_first", std::to_string(w_first));
  b.set_metadata("w_split", split ? "1" : "0");
  for (const auto& [k, v] : hyper) b.set_metadata("hyper." + k, format_double(v));
}

/// 0 <= z_i <= 1 as explicit rows so the program stays CBF-exportable.
inline void unit_box_rows(ProgramBuilder& b, const std::vector<std::size_t>& z) {
  for (std::size_t i = 0; i < z.size(); ++i) {
    b.add_nonnegative(AffineExpr::variable(z[i]), "z_lo");
    b.add_nonnegative(AffineExpr(1.0) - AffineExpr::variable(z[i]), "z_hi");
  }
}

inline void mode_terms(ProgramBuilder& b, const std::vector<std::size_t>& z, const SvmMode& mode) {
  if (mode.value < 0) throw Error(ErrorCode::InvalidSpec, "mode parameter must be nonnegative");
  if (mode.is_penalty()) {
    AffineExpr obj;
    for (auto v : z) obj.add(v, mode.value);
    b.add_objective(obj);
  } else {
    AffineExpr row(mode.value);
    for (auto v : z) row.add(v, -1.0);
    b.add_nonnegative(row, "cardinality");
  }
}

inline void check_dataset(const SvmDataset& ds) {
  ds.check();
  if (ds.n() == 0) throw Error(ErrorCode::InvalidSpec, "dataset is empty");
  if (ds.p_tilde() == 0) throw Error(ErrorCode::InvalidSpec, "dataset has no features");
}

}  // namespace detail

/// Convex relaxation of the 0-1 loss SVM over the collection `L`.
/// Variable order: w (p~), W (lower triangle), z (n), then g^L per subset.
inline ConicProgram build_conic_relaxation(const SvmDataset& ds, const SubsetCollection& L, const SvmMode& mode) {
  detail::check_dataset(ds);
  detail::check_collection(L, ds.n());
  const std::size_t n = ds.n();
  const std::size_t p = ds.p_tilde();
  const Matrix A = ds.signed_matrix();
  auto row = [&](std::size_t i) -> Vector { return A.row(static_cast<Eigen::Index>(i)).transpose(); };

  ProgramBuilder b("conic-" + L.tag);
  const auto w = b.add_variables(p, "w");
  std::vector<std::size_t> W;
  for (std::size_t k = 0; k < p; ++k) {
    for (std::size_t j = k; j < p; ++j) W.push_back(b.add_variable("W" + std::to_string(j) + "_" + std::to_string(k)));
  }
  const auto z = b.add_variables(n, "z");

  AffineExpr trace;
  for (std::size_t j = 0; j < p; ++j) trace.add(W[detail::wmat_index(p, j, j)], 1.0);
  b.add_objective(trace);
  detail::mode_terms(b, z, mode);
  detail::unit_box_rows(b, z);

  // [[1, w'], [w, W]] >= 0
  {
    std::vector<std::vector<AffineExpr>> m(p + 1, std::vector<AffineExpr>(p + 1));
    m[0][0] = AffineExpr(1.0);
    for (std::size_t j = 0; j < p; ++j) {
      m[j + 1][0] = AffineExpr::variable(w[j]);
      for (std::size_t k = 0; k <= j; ++k) m[j + 1][k + 1] = AffineExpr::variable(W[detail::wmat_index(p, j, k)]);
    }
    b.add_psd(m, "W - ww'");
  }

  for (std::size_t l = 0; l < L.size(); ++l) {
    const auto& S = L.subsets[l];
    const std::size_t m = S.size();
    std::vector<std::size_t> g;
    for (std::size_t k = 0; k < m; ++k) g.push_back(b.add_variable("g" + std::to_string(l) + "_" + std::to_string(k)));
    for (std::size_t k = 0; k < m; ++k) {
      // g >= 1 - a_i'w
      AffineExpr e = AffineExpr::variable(g[k]) + detail::linear_in(w, row(S[k])) - AffineExpr(1.0);
      b.add_nonnegative(e, "g_lower");
    }
    std::vector<std::vector<AffineExpr>> M(m + 1, std::vector<AffineExpr>(m + 1));
    for (auto i : S) M[0][0].add(z[i], 1.0);
    for (std::size_t r = 0; r < m; ++r) {
      M[r + 1][0] = AffineExpr::variable(g[r], -1.0);
      for (std::size_t c = 0; c <= r; ++c) {
        const Vector ar = row(S[r]);
        const Vector ac = row(S[c]);
        M[r + 1][c + 1] = AffineExpr(1.0) - detail::linear_in(w, ar) - detail::linear_in(w, ac) +
                          detail::bilinear_in(W, p, ar, ac);
      }
    }
    if (m == 1) {
      b.add_rotated_cone(M[0][0], M[1][1], {M[1][0]}, "L" + std::to_string(l));  // 2x2 PSD as a rotated cone
    } else {
      b.add_psd(M, "L" + std::to_string(l));
    }
  }

  detail::tag_program(b, "conic-" + L.tag, p, 0, false,
                      {{mode.is_penalty() ? "lambda" : "k", mode.value}, {"subsets", static_cast<double>(L.size())}});
  b.set_metadata("mode", mode.is_penalty() ? "penalty" : "cardinality");
  return b.finalize();
}

/// min ||w||^2 + lambda sum xi,  xi >= 0,  xi >= 1 - a_i'w.
inline ConicProgram build_hinge(const SvmDataset& ds, double lambda) {
  detail::check_dataset(ds);
  if (lambda < 0) throw Error(ErrorCode::InvalidSpec, "lambda must be nonnegative");
  const std::size_t p = ds.p_tilde();
  const Matrix A = ds.signed_matrix();
  ProgramBuilder b("hinge");
  const auto w = b.add_variables(p, "w");
  const std::size_t s = b.add_variable("s");
  const auto xi = b.add_variables(ds.n(), "xi");
  std::vector<AffineExpr> wexpr;
  for (auto v : w) wexpr.push_back(AffineExpr::variable(v));
  b.add_rotated_cone(AffineExpr::variable(s), AffineExpr(1.0), wexpr, "s >= ||w||^2");
  AffineExpr obj = AffineExpr::variable(s);
  for (std::size_t i = 0; i < ds.n(); ++i) {
    b.add_nonnegative(AffineExpr::variable(xi[i]), "xi_nonneg");
    b.add_nonnegative(AffineExpr::variable(xi[i]) + detail::linear_in(w, A.row(static_cast<Eigen::Index>(i)).transpose()) -
                          AffineExpr(1.0),
                      "hinge");
    obj.add(xi[i], lambda);
  }
  b.add_objective(obj);
  detail::tag_program(b, "hinge", p, 0, false, {{"lambda", lambda}});
  return b.finalize();
}

/// min sum xi  s.t.  a_i'w - lambda ||w||_1 >= 1 - xi_i,  xi >= 0,  w = w+ - w-.
inline ConicProgram build_robust_l1(const SvmDataset& ds, double lambda) {
  detail::check_dataset(ds);
  if (lambda < 0) throw Error(ErrorCode::InvalidSpec, "lambda must be nonnegative");
  const std::size_t p = ds.p_tilde();
  const Matrix A = ds.signed_matrix();
  ProgramBuilder b("robust-l1");
  const auto wp = b.add_variables(p, "wp");
  const auto wm = b.add_variables(p, "wm");
  const auto xi = b.add_variables(ds.n(), "xi");
  for (std::size_t j = 0; j < p; ++j) {
    b.add_nonnegative(AffineExpr::variable(wp[j]), "wp_nonneg");
    b.add_nonnegative(AffineExpr::variable(wm[j]), "wm_nonneg");
  }
  AffineExpr obj;
  for (std::size_t i = 0; i < ds.n(); ++i) {
    const Vector a = A.row(static_cast<Eigen::Index>(i)).transpose();
    AffineExpr e = AffineExpr::variable(xi[i]) - AffineExpr(1.0);
    for (std::size_t j = 0; j < p; ++j) {
      e.add(wp[j], a(static_cast<Eigen::Index>(j)) - lambda);
      e.add(wm[j], -a(static_cast<Eigen::Index>(j)) - lambda);
    }
    b.add_nonnegative(AffineExpr::variable(xi[i]), "xi_nonneg");
    b.add_nonnegative(e, "robust_margin");
    obj.add(xi[i], 1.0);
  }
  b.add_objective(obj);
  detail::tag_program(b, "robust-l1", p, 0, true, {{"lambda", lambda}});
  return b.finalize();
}

/// Largest uniform d with I - d A'A >= 0, i.e. the validity boundary.
inline std::vector<double> boundary_decomposition(const SvmDataset& ds) {
  const Matrix A = ds.signed_matrix();
  const Matrix G = A.transpose() * A;
  const double top = Eigen::SelfAdjointEigenSolver<Matrix>(G).eigenvalues().maxCoeff();
  if (!(top > 0)) throw Error(ErrorCode::DegenerateDirection, "signed matrix is zero");
  return std::vector<double>(ds.n(), 1.0 / top);
}

/// ||w||^2 - sum d_i x_i^2 + sum d_i (x_i+^2 / z_i + x_i-^2) (+ lambda sum z),
/// x = 1 - A w. The residual quadratic is kept through an epigraph cone.
inline ConicProgram build_decomposition_relaxation(const SvmDataset& ds, const std::vector<double>& dvec,
                                                   const SvmMode& mode) {
  detail::check_dataset(ds);
  const std::size_t n = ds.n();
  const std::size_t p = ds.p_tilde();
  require_same_size(dvec.size(), n, "decomposition vector");
  for (double d : dvec) {
    if (!(d >= 0) || !std::isfinite(d)) throw Error(ErrorCode::InvalidDecomposition, "decomposition entries must be finite and >= 0");
  }
  const Matrix A = ds.signed_matrix();
  const Vector dv = to_vector(dvec);
  const Matrix R = Matrix::Identity(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p)) -
                   A.transpose() * dv.asDiagonal() * A;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(R);
  if (eig.eigenvalues().minCoeff() < -1e-9) {
    throw Error(ErrorCode::InvalidDecomposition,
                "I - A'DA has eigenvalue " + format_double(eig.eigenvalues().minCoeff()));
  }

  ProgramBuilder b("decomposition");
  const auto w = b.add_variables(p, "w");
  const auto z = b.add_variables(n, "z");
  const std::size_t s = b.add_variable("s");

  // s >= w'Rw via R = F'F; linear part 2 sum d_i a_i'w - sum d_i.
  std::vector<AffineExpr> Fw;
  for (Eigen::Index k = 0; k < eig.eigenvalues().size(); ++k) {
    const double lam = eig.eigenvalues()(k);
    if (lam <= 1e-14) continue;
    Fw.push_back(detail::linear_in(w, eig.eigenvectors().col(k), std::sqrt(lam)));
  }
  if (Fw.empty()) Fw.push_back(AffineExpr(0.0));
  b.add_rotated_cone(AffineExpr::variable(s), AffineExpr(1.0), Fw, "residual quadratic");
  AffineExpr obj = AffineExpr::variable(s);
  obj += detail::linear_in(w, A.transpose() * dv, 2.0);
  obj.constant -= dv.sum();

  detail::mode_terms(b, z, mode);
  detail::unit_box_rows(b, z);
  for (std::size_t i = 0; i < n; ++i) {
    if (dvec[i] == 0.0) continue;
    const AffineExpr x = AffineExpr(1.0) - detail::linear_in(w, A.row(static_cast<Eigen::Index>(i)).transpose());
    const std::size_t q = b.add_variable("q" + std::to_string(i));
    const std::size_t u = b.add_variable("u" + std::to_string(i));
    const std::size_t r = b.add_variable("r" + std::to_string(i));
    const std::size_t v = b.add_variable("v" + std::to_string(i));
    b.add_nonnegative(AffineExpr::variable(q), "q >= 0");
    b.add_nonnegative(AffineExpr::variable(q) - x, "q >= x");
    b.add_rotated_cone(AffineExpr::variable(u), AffineExpr::variable(z[i]), {AffineExpr::variable(q)}, "u z >= q^2");
    b.add_nonnegative(AffineExpr::variable(r, -1.0), "r <= 0");
    b.add_nonnegative(x - AffineExpr::variable(r), "r <= x");
    b.add_rotated_cone(AffineExpr::variable(v), AffineExpr(1.0), {AffineExpr::variable(r)}, "v >= r^2");
    obj.add(u, dvec[i]);
    obj.add(v, dvec[i]);
  }
  b.add_objective(obj);
  detail::tag_program(b, "decomposition", p, 0, false, {{mode.is_penalty() ? "lambda" : "k", mode.value}});
  b.set_metadata("mode", mode.is_penalty() ? "penalty" : "cardinality");
  return b.finalize();
}

// ---------------------------------------------------------------------------
// Estimators and metrics
// ---------------------------------------------------------------------------

struct Estimator {
  Vector w;
  std::string method;
  std::map<std::string, double> hyper;
  double objective = 0.0;
  std::uint64_t seed = 0;
};

inline Estimator extract_estimator(const Solution& sol, const ConicProgram& program) {
  if (sol.status != SolveStatus::Optimal) {
    throw Error(ErrorCode::StatusNotOptimal, std::string("cannot extract estimator from ") + to_string(sol.status));
  }
  auto meta = [&](const std::string& key) {
    auto it = program.metadata.find(key);
    if (it == program.metadata.end()) throw Error(ErrorCode::InvalidSpec, "program lacks metadata '" + key + "'");
    return it->second;
  };
  const std::size_t p = std::stoul(meta("p_tilde"));
  const std::size_t first = std::stoul(meta("w_first"));
  const bool split = meta("w_split") == "1";
  Estimator est;
  est.method = meta("method");
  est.objective = sol.objective;
  est.w.resize(static_cast<Eigen::Index>(p));
  for (std::size_t j = 0; j < p; ++j) {
    double v = sol.primal.at(first + j);
    if (split) v -= sol.primal.at(first + p + j);
    est.w(static_cast<Eigen::Index>(j)) = v;
  }
  for (const auto& [k, v] : program.metadata) {
    if (k.rfind("hyper.", 0) == 0) {
      double x = 0;
      if (parse_double(v, x)) est.hyper[k.substr(6)] = x;
    }
  }
  if (!est.w.allFinite()) throw Error(ErrorCode::StatusNotOptimal, "estimator has non-finite entries");
  return est;
}

inline Vector margins(const Vector& w, const SvmDataset& ds) {
  require_same_size(static_cast<std::size_t>(w.size()), ds.p_tilde(), "estimator width");
  return ds.signed_matrix() * w;
}

/// Fraction of points with y_i a_i'w <= 0 (a zero score counts as an error).
inline double misclassification_rate(const Vector& w, const SvmDataset& ds) {
  if (ds.n() == 0) return 0.0;
  const Vector m = margins(w, ds);
  return static_cast<double>((m.array() <= 0.0).count()) / static_cast<double>(ds.n());
}
inline double misclassification_rate(const Estimator& est, const SvmDataset& ds) {
  return misclassification_rate(est.w, ds);
}

inline std::size_t margin_violations(const Vector& w, const SvmDataset& ds) {
  const Vector m = margins(w, ds);
  return static_cast<std::size_t>((m.array() < 1.0).count());
}

/// ||w||^2 + sum_i phi(1 - y_i a_i'w; d_i, lambda).
inline double phi_objective(const Vector& w, const SvmDataset& ds, const std::vector<double>& dvec, double lambda) {
  require_same_size(dvec.size(), ds.n(), "decomposition vector");
  const Vector m = margins(w, ds);
  double total = w.squaredNorm();
  for (std::size_t i = 0; i < ds.n(); ++i) total += phi_loss(1.0 - m(static_cast<Eigen::Index>(i)), {dvec[i], lambda});
  return total;
}

inline nlohmann::json to_json(const Estimator& est) {
  nlohmann::json j;
  j["method"] = est.method;
  j["hyperparameters"] = est.hyper;
  j["w"] = to_std(est.w);
  j["objective"] = est.objective;
  j["seed"] = est.seed;
  return j;
}

inline Estimator estimator_from_json(const nlohmann::json& j) {
  Estimator est;
  try {
    est.method = j.at("method").get<std::string>();
    est.hyper = j.at("hyperparameters").get<std::map<std::string, double>>();
    est.w = to_vector(j.at("w").get<std::vector<double>>());
    est.objective = j.at("objective").get<double>();
    est.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("estimator JSON: ") + e.what());
  }
  return est;
}

}  // namespace rankone
