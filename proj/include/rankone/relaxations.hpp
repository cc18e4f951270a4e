#pragma once

// Subset copositive inequalities for the lifted set (x, X, z), their
// semidefinite extended forms, a grid copositivity oracle, and the big-M
// model of the 0-1 loss SVM.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "rankone/conic.hpp"
#include "rankone/dataset.hpp"
#include "rankone/error.hpp"
#include "rankone/hull.hpp"
#include "rankone/numeric.hpp"
#include "rankone/oracle.hpp"
#include "rankone/solver.hpp"
#include "rankone/svm.hpp"

namespace rankone {

struct ExtendedPoint {
  Vector x;
  Matrix X;
  Vector z;

  std::size_t size() const { return static_cast<std::size_t>(x.size()); }

  void check() const {
    require_same_size(static_cast<std::size_t>(X.rows()), size(), "X rows");
    require_same_size(static_cast<std::size_t>(X.cols()), size(), "X cols");
    require_same_size(static_cast<std::size_t>(z.size()), size(), "z length");
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      if (!(z(i) >= 0.0 && z(i) <= 1.0)) {
        throw Error(ErrorCode::ZOutOfBounds, "z[" + std::to_string(i) + "] = " + format_double(z(i)));
      }
    }
  }

  /// X - xx' >= -tol I.
  bool lifted_psd(double tol = 1e-9) const { return min_eigenvalue(X - x * x.transpose()) >= -tol; }

  /// Integer point with X = xx'. Signs must agree with z.
  static ExtendedPoint rank_one(const Vector& x, const Vector& z) {
    ExtendedPoint p{x, x * x.transpose(), z};
    p.check();
    return p;
  }
};

struct SubsetConstraintSpec {
  std::vector<std::size_t> S;
  Sidedness side = Sidedness::TwoSided;

  void check(std::size_t n) const {
    if (S.empty()) throw Error(ErrorCode::InvalidSpec, "subset is empty");
    for (std::size_t k = 0; k < S.size(); ++k) {
      if (S[k] >= n) throw Error(ErrorCode::DimensionMismatch, "subset index " + std::to_string(S[k]) + " >= n");
      if (k > 0 && S[k] <= S[k - 1]) throw Error(ErrorCode::InvalidSpec, "subset must be sorted and deduplicated");
    }
  }
};

/// [[sum_S z, -x_S'], [-x_S, X_S]] and, for two-sided specs,
/// [[sum_S (1 - z), x_S'], [x_S, X_S]].
inline std::vector<Matrix> copositive_matrices_for_subset(const ExtendedPoint& pt, const SubsetConstraintSpec& spec) {
  pt.check();
  spec.check(pt.size());
  const auto m = static_cast<Eigen::Index>(spec.S.size());
  Matrix plus(m + 1, m + 1);
  Matrix minus(m + 1, m + 1);
  double zs = 0.0;
  double zc = 0.0;
  for (Eigen::Index a = 0; a < m; ++a) {
    const auto i = static_cast<Eigen::Index>(spec.S[static_cast<std::size_t>(a)]);
    zs += pt.z(i);
    zc += 1.0 - pt.z(i);
    plus(a + 1, 0) = plus(0, a + 1) = -pt.x(i);
    minus(a + 1, 0) = minus(0, a + 1) = pt.x(i);
    for (Eigen::Index b = 0; b < m; ++b) {
      const auto j = static_cast<Eigen::Index>(spec.S[static_cast<std::size_t>(b)]);
      plus(a + 1, b + 1) = minus(a + 1, b + 1) = pt.X(i, j);
    }
  }
  plus(0, 0) = zs;
  minus(0, 0) = zc;
  if (spec.side == Sidedness::OneSided) return {plus};
  return {plus, minus};
}

struct CopositivityResult {
  bool copositive = true;
  double min_value = kInf;  // min of v'Mv over the sampled simplex points
  Vector witness;           // argmin
  std::size_t evaluated = 0;
  bool exact = false;       // verdict from a closed-form criterion
};

namespace detail {

inline void consider_point(const Matrix& M, const Vector& v, CopositivityResult& r) {
  const double val = v.dot(M * v);
  ++r.evaluated;
  if (val < r.min_value) {
    r.min_value = val;
    r.witness = v;
  }
}

/// Minimizer of v'Mv over the 2-simplex when the off-diagonal is the cause.
inline Vector copositive_2x2_candidate(const Matrix& M) {
  const double a = M(0, 0);
  const double b = M(0, 1);
  const double c = M(1, 1);
  Vector v(2);
  const double den = a + c - 2.0 * b;
  if (den > 0) {
    const double t = std::clamp((c - b) / den, 0.0, 1.0);
    v << t, 1.0 - t;
  } else {
    v << 0.5, 0.5;
  }
  return v;
}

}  // namespace detail

/// Samples v'Mv over the unit simplex grid with `resolution` subdivisions,
/// every coordinate vector and every pairwise midpoint. Orders 1 and 2 use
/// exact criteria for the verdict; the witness is still the sampled argmin.
inline CopositivityResult grid_copositivity_check(const Matrix& M, std::size_t resolution = 100, double tol = -1.0) {
  const auto m = static_cast<std::size_t>(M.rows());
  if (M.cols() != M.rows()) throw Error(ErrorCode::DimensionMismatch, "matrix is not square");
  if (m == 0) throw Error(ErrorCode::DimensionMismatch, "empty matrix");
  if (m > 6) throw Error(ErrorCode::TooLarge, "grid copositivity supports order <= 6");
  if (resolution == 0) throw Error(ErrorCode::InvalidSpec, "resolution must be positive");
  if (detail::binomial(resolution + m - 1, m - 1) > 2e8) {
    throw Error(ErrorCode::TooLarge, "simplex grid exceeds 2e8 points");
  }
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  if (tol < 0) tol = 1e-9 * scale;

  CopositivityResult r;
  const auto mi = static_cast<Eigen::Index>(m);
  for (Eigen::Index i = 0; i < mi; ++i) {
    detail::consider_point(M, Vector::Unit(mi, i), r);
    for (Eigen::Index j = i + 1; j < mi; ++j) {
      Vector v = Vector::Zero(mi);
      v(i) = v(j) = 0.5;
      detail::consider_point(M, v, r);
    }
  }
  // Compositions c of `resolution` into m parts, v = c / resolution.
  std::vector<std::size_t> c(m, 0);
  c[m - 1] = resolution;
  const double inv = 1.0 / static_cast<double>(resolution);
  Vector v(mi);
  while (true) {
    for (std::size_t k = 0; k < m; ++k) v(static_cast<Eigen::Index>(k)) = static_cast<double>(c[k]) * inv;
    detail::consider_point(M, v, r);
    // Next composition: move one unit from the last part into the rightmost
    // earlier slot that can still grow.
    std::size_t k = m - 1;
    while (k > 0 && c[k] == 0) --k;
    if (k == 0) break;
    const std::size_t rest = c[k] - 1;
    c[k] = 0;
    ++c[k - 1];
    c[m - 1] = rest;
  }

  if (m == 1) {
    r.exact = true;
    r.copositive = M(0, 0) >= -tol;
  } else if (m == 2) {
    const double a = M(0, 0);
    const double b = M(0, 1);
    const double cc = M(1, 1);
    r.exact = true;
    r.copositive = a >= -tol && cc >= -tol && b + std::sqrt(std::max(a, 0.0) * std::max(cc, 0.0)) >= -tol;
    if (!r.copositive) detail::consider_point(M, detail::copositive_2x2_candidate(M), r);
  } else {
    r.copositive = r.min_value >= -tol;
  }
  return r;
}

struct SdpExtension {
  std::vector<std::size_t> g;
  std::vector<std::size_t> h;  // empty for one-sided specs
  std::vector<std::size_t> blocks;
};

/// Extended semidefinite form of the subset copositive inequalities:
/// h <= x_S <= g with [[sum z, -g'], [-g, X_S]] and [[sum (1 - z), h'], [h, X_S]]
/// PSD. One-sided specs keep g and the first block. `X_S` is read from its
/// lower triangle.
inline SdpExtension sdp_extension_for_subset(const SubsetConstraintSpec& spec, ProgramBuilder& b,
                                             const std::vector<AffineExpr>& x_S,
                                             const std::vector<std::vector<AffineExpr>>& X_S,
                                             const std::vector<AffineExpr>& z_S) {
  const std::size_t m = spec.S.size();
  if (m == 0) throw Error(ErrorCode::InvalidSpec, "subset is empty");
  require_same_size(x_S.size(), m, "x_S length");
  require_same_size(z_S.size(), m, "z_S length");
  require_same_size(X_S.size(), m, "X_S rows");
  for (const auto& row : X_S) require_same_size(row.size(), m, "X_S cols");

  const bool two = spec.side == Sidedness::TwoSided;
  std::string tag;
  for (auto i : spec.S) tag += (tag.empty() ? "" : "_") + std::to_string(i);
  SdpExtension ext;
  ext.g = b.add_variables(m, "g" + tag + "_");
  if (two) ext.h = b.add_variables(m, "h" + tag + "_");
  for (std::size_t k = 0; k < m; ++k) {
    b.add_nonnegative(AffineExpr::variable(ext.g[k]) - x_S[k], "g >= x");
    if (two) b.add_nonnegative(x_S[k] - AffineExpr::variable(ext.h[k]), "x >= h");
  }
  auto block = [&](const AffineExpr& corner, const std::vector<std::size_t>& v, double sign) {
    std::vector<std::vector<AffineExpr>> M(m + 1, std::vector<AffineExpr>(m + 1));
    M[0][0] = corner;
    for (std::size_t i = 0; i < m; ++i) {
      M[i + 1][0] = AffineExpr::variable(v[i], sign);
      for (std::size_t j = 0; j <= i; ++j) M[i + 1][j + 1] = X_S[i][j];
    }
    return M;
  };
  AffineExpr zs;
  AffineExpr zc;
  for (const auto& e : z_S) {
    zs = zs + e;
    zc = zc + (AffineExpr(1.0) - e);
  }
  ext.blocks.push_back(b.add_psd(block(zs, ext.g, -1.0), "subset psd (z)"));
  if (two) ext.blocks.push_back(b.add_psd(block(zc, ext.h, 1.0), "subset psd (1-z)"));
  return ext;
}

/// Certificate for an integer point: g = x_S when sum_S z >= 1 else 0, and
/// h = x_S when sum_S (1 - z) >= 1 else 0. Returns the smallest eigenvalue
/// over the resulting blocks (>= 0 means the extension is satisfied) or
/// -inf when a bound h <= x <= g fails.
inline double sdp_extension_certificate(const ExtendedPoint& pt, const SubsetConstraintSpec& spec) {
  pt.check();
  spec.check(pt.size());
  const auto m = static_cast<Eigen::Index>(spec.S.size());
  Vector xs(m);
  Matrix Xs(m, m);
  double zs = 0.0;
  double zc = 0.0;
  for (Eigen::Index a = 0; a < m; ++a) {
    const auto i = static_cast<Eigen::Index>(spec.S[static_cast<std::size_t>(a)]);
    xs(a) = pt.x(i);
    zs += pt.z(i);
    zc += 1.0 - pt.z(i);
    for (Eigen::Index c = 0; c < m; ++c) {
      Xs(a, c) = pt.X(i, static_cast<Eigen::Index>(spec.S[static_cast<std::size_t>(c)]));
    }
  }
  const Vector g = zs >= 1.0 ? xs : Vector::Zero(m);
  const Vector h = zc >= 1.0 ? xs : Vector::Zero(m);
  if ((g - xs).minCoeff() < 0) return -kInf;
  auto block = [&](double corner, const Vector& v, double sign) {
    Matrix M(m + 1, m + 1);
    M(0, 0) = corner;
    M.block(1, 0, m, 1) = sign * v;
    M.block(0, 1, 1, m) = sign * v.transpose();
    M.block(1, 1, m, m) = Xs;
    return min_eigenvalue(M);
  };
  double lo = block(zs, g, -1.0);
  if (spec.side == Sidedness::TwoSided) {
    if ((xs - h).minCoeff() < 0) return -kInf;
    lo = std::min(lo, block(zc, h, 1.0));
  }
  return lo;
}

/// Solves the extension with (x, X, z) fixed; true when the solver finds it
/// feasible.
inline bool sdp_extension_feasible(const ExtendedPoint& pt, const SubsetConstraintSpec& spec,
                                   const SolverConfig& cfg = {}) {
  pt.check();
  spec.check(pt.size());
  ProgramBuilder b("subset-extension");
  std::vector<AffineExpr> xs;
  std::vector<AffineExpr> zs;
  std::vector<std::vector<AffineExpr>> Xs;
  for (auto i : spec.S) {
    xs.emplace_back(pt.x(static_cast<Eigen::Index>(i)));
    zs.emplace_back(pt.z(static_cast<Eigen::Index>(i)));
    std::vector<AffineExpr> row;
    for (auto j : spec.S) row.emplace_back(pt.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    Xs.push_back(std::move(row));
  }
  sdp_extension_for_subset(spec, b, xs, Xs, zs);
  const Solution sol = solve(b.finalize(), cfg);
  return sol.status == SolveStatus::Optimal;
}

/// Right-hand side of the fixed-d inequality <dd', X> >= ... for d >= 0.
inline double fixed_d_rhs(const ExtendedPoint& pt, const std::vector<double>& d) {
  pt.check();
  require_same_size(d.size(), pt.size(), "d length");
  for (double v : d) {
    if (v < 0) throw Error(ErrorCode::InvalidSpec, "fixed-d inequality needs d >= 0");
  }
  return eval_hull_rhs(RankOneSet(d), to_std(pt.x), to_std(pt.z));
}

struct EquivalenceReport {
  bool copositive = false;
  bool sdp_feasible = false;
  bool agree = false;
  bool near_boundary = false;  // |grid min| within one grid cell
  double grid_min = 0.0;
  double sdp_shift = 0.0;      // optimal s in the shifted feasibility problem
  double cell_error = 0.0;
  Vector y;
};

/// Compares grid copositivity of [[t, x'], [x, X]] with feasibility of
/// exists y <= x: [[t, y'], [y, X]] PSD. The SDP side minimizes a uniform
/// shift s of the diagonal and reports feasible when s <= sdp_tol.
inline EquivalenceReport cp_sdp_equivalence_check(double t, const Vector& x, const Matrix& X,
                                                  std::size_t resolution = 100, const SolverConfig& cfg = {},
                                                  double sdp_tol = 1e-7) {
  const auto m = static_cast<std::size_t>(x.size());
  require_same_size(static_cast<std::size_t>(X.rows()), m, "X rows");
  require_same_size(static_cast<std::size_t>(X.cols()), m, "X cols");
  if (m + 1 > 4) throw Error(ErrorCode::TooLarge, "equivalence check supports order <= 4");
  if (m > 0 && min_eigenvalue(X) < -1e-9) throw Error(ErrorCode::XNotPsd, "X is not positive semidefinite");

  const auto mi = static_cast<Eigen::Index>(m);
  Matrix M(mi + 1, mi + 1);
  M(0, 0) = t;
  M.block(1, 0, mi, 1) = x;
  M.block(0, 1, 1, mi) = x.transpose();
  M.block(1, 1, mi, mi) = X;

  EquivalenceReport rep;
  const CopositivityResult cop = grid_copositivity_check(M, resolution);
  rep.copositive = cop.copositive;
  rep.grid_min = cop.min_value;
  // v'Mv changes by at most 2 max|M| ||dv||_1 per step, and a cell has
  // ||dv||_1 <= m / resolution.
  rep.cell_error = 2.0 * static_cast<double>(m + 1) * M.cwiseAbs().maxCoeff() / static_cast<double>(resolution);
  rep.near_boundary = std::abs(cop.min_value) <= rep.cell_error;

  ProgramBuilder b("cp-sdp");
  const std::size_t s = b.add_variable("s");
  const auto y = b.add_variables(m, "y");
  std::vector<std::vector<AffineExpr>> P(m + 1, std::vector<AffineExpr>(m + 1));
  P[0][0] = AffineExpr(t) + AffineExpr::variable(s);
  for (std::size_t i = 0; i < m; ++i) {
    b.add_nonnegative(AffineExpr(x(static_cast<Eigen::Index>(i))) - AffineExpr::variable(y[i]), "y <= x");
    P[i + 1][0] = AffineExpr::variable(y[i]);
    for (std::size_t j = 0; j <= i; ++j) P[i + 1][j + 1] = AffineExpr(X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    P[i + 1][i + 1] = P[i + 1][i + 1] + AffineExpr::variable(s);
  }
  b.add_psd(P, "shifted block");
  b.add_objective(AffineExpr::variable(s));
  const Solution sol = solve(b.finalize(), cfg);
  if (sol.status != SolveStatus::Optimal) {
    throw Error(ErrorCode::StatusNotOptimal, std::string("equivalence SDP ended ") + to_string(sol.status) + " " + sol.message);
  }
  rep.sdp_shift = sol.primal[s];
  rep.y.resize(mi);
  for (std::size_t i = 0; i < m; ++i) rep.y(static_cast<Eigen::Index>(i)) = sol.primal[y[i]];
  rep.sdp_feasible = rep.sdp_shift <= sdp_tol;
  rep.agree = rep.copositive == rep.sdp_feasible;
  return rep;
}

inline constexpr double kDefaultBigM = 1000.0;

/// min ||w||^2 (+ lambda sum z)  s.t.  a_i'w >= 1 - M z_i, z binary
/// (or sum z <= k). Variables: w (p~), then z (n).
inline ConicProgram build_bigm_model(const SvmDataset& ds, double M = kDefaultBigM,
                                     const SvmMode& mode = SvmMode::penalty(1.0)) {
  detail::check_dataset(ds);
  if (!(M > 0)) throw Error(ErrorCode::NonPositiveParams, "big-M constant must be positive");
  const std::size_t p = ds.p_tilde();
  const Matrix A = ds.signed_matrix();
  ProgramBuilder b("bigm");
  const auto w = b.add_variables(p, "w");
  std::vector<std::size_t> z;
  for (std::size_t i = 0; i < ds.n(); ++i) {
    z.push_back(b.add_variable("z" + std::to_string(i), 0.0, 1.0));
    b.set_integer(z.back());
  }
  for (std::size_t j = 0; j < p; ++j) b.add_objective_product(w[j], w[j], 1.0);
  for (std::size_t i = 0; i < ds.n(); ++i) {
    b.add_nonnegative(detail::linear_in(w, A.row(static_cast<Eigen::Index>(i)).transpose()) +
                          AffineExpr::variable(z[i], M) - AffineExpr(1.0),
                      "bigm" + std::to_string(i));
  }
  detail::mode_terms(b, z, mode);
  detail::tag_program(b, "bigm", p, 0, false, {{"M", M}, {mode.is_penalty() ? "lambda" : "k", mode.value}});
  b.set_metadata("mode", mode.is_penalty() ? "penalty" : "cardinality");
  return b.finalize();
}

}  // namespace rankone
