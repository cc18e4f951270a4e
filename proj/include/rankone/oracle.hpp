#pragma once

// Exact references at desk scale: the hard-margin subproblem and the 0-1
// loss SVM optimum by enumeration of the misclassified set.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "rankone/conic.hpp"
#include "rankone/dataset.hpp"
#include "rankone/error.hpp"
#include "rankone/solver.hpp"

namespace rankone {

/// Misclassification budget: either at most k points (Cardinality) or a
/// penalty lambda per point (Penalty).
struct SvmMode {
  enum Kind { Cardinality, Penalty } kind = Cardinality;
  double value = 0.0;  // k or lambda

  static SvmMode cardinality(double k) { return {Cardinality, k}; }
  static SvmMode penalty(double lambda) { return {Penalty, lambda}; }
  bool is_penalty() const { return kind == Penalty; }
  std::string describe() const { return (is_penalty() ? "lambda=" : "k=") + format_double(value); }
};

struct HardMarginResult {
  bool feasible = false;
  Vector w;
  double objective = 0.0;
};

/// min ||w||^2  s.t.  rows * w >= 1.
inline HardMarginResult solve_hard_margin(const Matrix& rows, std::size_t dim, const SolverConfig& cfg = {}) {
  require_same_size(static_cast<std::size_t>(rows.cols()), dim, "hard-margin row width");
  HardMarginResult out;
  if (rows.rows() == 0) {
    out.feasible = true;
    out.w = Vector::Zero(static_cast<Eigen::Index>(dim));
    return out;
  }
  ProgramBuilder b("hard-margin");
  const auto w = b.add_variables(dim, "w");
  const std::size_t s = b.add_variable("s");
  std::vector<AffineExpr> wexpr;
  for (auto v : w) wexpr.push_back(AffineExpr::variable(v));
  b.add_rotated_cone(AffineExpr::variable(s), AffineExpr(1.0), wexpr, "s >= ||w||^2");
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    AffineExpr e(-1.0);
    for (std::size_t j = 0; j < dim; ++j) {
      const double a = rows(i, static_cast<Eigen::Index>(j));
      if (a != 0.0) e.add(w[j], a);
    }
    b.add_nonnegative(e);
  }
  b.add_objective(AffineExpr::variable(s));
  const Solution sol = solve(b.finalize(), cfg);
  if (sol.status == SolveStatus::Infeasible) return out;
  if (sol.status != SolveStatus::Optimal) {
    throw Error(ErrorCode::StatusNotOptimal, std::string("hard-margin solve ended ") + to_string(sol.status) + " " + sol.message);
  }
  out.feasible = true;
  out.w.resize(static_cast<Eigen::Index>(dim));
  for (std::size_t j = 0; j < dim; ++j) out.w(static_cast<Eigen::Index>(j)) = sol.primal[w[j]];
  out.objective = out.w.squaredNorm();
  return out;
}

struct ExactSvmResult {
  bool feasible = false;  // false only in cardinality mode when no |S| = k works
  double objective = kInf;
  Vector w;
  std::vector<std::size_t> misclassified;
  SvmMode mode;
  std::size_t subsets_solved = 0;
};

namespace detail {

inline double binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

/// Advances `c` (sorted, size k, values < n) to the next combination in
/// lexicographic order. Returns false after the last one.
inline bool next_combination(std::vector<std::size_t>& c, std::size_t n) {
  const std::size_t k = c.size();
  for (std::size_t i = k; i-- > 0;) {
    if (c[i] < n - k + i) {
      ++c[i];
      for (std::size_t j = i + 1; j < k; ++j) c[j] = c[j - 1] + 1;
      return true;
    }
  }
  return false;
}

inline Matrix complement_rows(const Matrix& A, const std::vector<std::size_t>& drop) {
  Matrix out(A.rows() - static_cast<Eigen::Index>(drop.size()), A.cols());
  Eigen::Index r = 0;
  std::size_t d = 0;
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    if (d < drop.size() && drop[d] == static_cast<std::size_t>(i)) {
      ++d;
      continue;
    }
    out.row(r++) = A.row(i);
  }
  return out;
}

}  // namespace detail

/// Global optimum of the 0-1 loss SVM by enumerating the dropped set S.
/// Cardinality mode visits |S| = floor(k) only (dropping more never hurts);
/// penalty mode visits |S| = 0, 1, ... and stops once lambda |S| reaches the
/// incumbent. Within a size, subsets go in lexicographic order and only a
/// strictly better value replaces the incumbent. An infeasible cardinality
/// instance comes back with feasible = false and an infinite objective.
inline ExactSvmResult exact_01_svm(const SvmDataset& ds, const SvmMode& mode, const SolverConfig& cfg = {}) {
  const std::size_t n = ds.n();
  const std::size_t dim = ds.p_tilde();
  const Matrix A = ds.signed_matrix();
  ExactSvmResult best;
  best.mode = mode;
  if (mode.value < 0) throw Error(ErrorCode::InvalidSpec, "mode parameter must be nonnegative");

  auto consider = [&](const std::vector<std::size_t>& S, double extra) {
    const HardMarginResult hm = solve_hard_margin(detail::complement_rows(A, S), dim, cfg);
    ++best.subsets_solved;
    if (!hm.feasible) return;
    const double value = hm.objective + extra;
    if (!std::isfinite(best.objective) || value < best.objective - 1e-9 * (1.0 + std::abs(best.objective))) {
      best.objective = value;
      best.w = hm.w;
      best.misclassified = S;
    }
  };

  if (!mode.is_penalty()) {
    const auto k = static_cast<std::size_t>(std::min<double>(std::floor(mode.value), static_cast<double>(n)));
    if (detail::binomial(n, k) > 1e6) {
      throw Error(ErrorCode::TooLarge, "C(" + std::to_string(n) + "," + std::to_string(k) + ") exceeds 1e6 subsets");
    }
    std::vector<std::size_t> S(k);
    for (std::size_t i = 0; i < k; ++i) S[i] = i;
    do {
      consider(S, 0.0);
    } while (k > 0 && detail::next_combination(S, n));
    if (k == n) {
      best.objective = 0.0;
      best.w = Vector::Zero(static_cast<Eigen::Index>(dim));
    }
  } else {
    if (n > 22) throw Error(ErrorCode::TooLarge, "penalty-mode enumeration supports n <= 22");
    const double lambda = mode.value;
    for (std::size_t k = 0; k <= n; ++k) {
      if (lambda * static_cast<double>(k) >= best.objective) break;
      std::vector<std::size_t> S(k);
      for (std::size_t i = 0; i < k; ++i) S[i] = i;
      do {
        consider(S, lambda * static_cast<double>(k));
      } while (k > 0 && detail::next_combination(S, n));
    }
  }
  best.feasible = std::isfinite(best.objective);
  return best;
}

}  // namespace rankone
