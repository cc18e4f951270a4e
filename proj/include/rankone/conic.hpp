#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "rankone/error.hpp"
#include "rankone/numeric.hpp"

namespace rankone {

// ---------------------------------------------------------------------------
// Cones
// ---------------------------------------------------------------------------

/// Cone tags of the intermediate representation. For a block with rows
/// v = A x + b:
///   Zero                v == 0
///   Nonnegative         v >= 0
///   SecondOrder         v[0] >= ||v[1:]||
///   RotatedSecondOrder  v[0] * v[1] >= ||v[2:]||^2, v[0], v[1] >= 0
///   PsdTriangle         smat(v) is positive semidefinite (svec storage)
enum class ConeKind { Zero, Nonnegative, SecondOrder, RotatedSecondOrder, PsdTriangle };

inline const char* to_string(ConeKind kind) {
  switch (kind) {
    case ConeKind::Zero: return "zero";
    case ConeKind::Nonnegative: return "nonnegative";
    case ConeKind::SecondOrder: return "second-order";
    case ConeKind::RotatedSecondOrder: return "rotated-second-order";
    case ConeKind::PsdTriangle: return "psd";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Affine expressions
// ---------------------------------------------------------------------------

struct Term {
  std::size_t var;
  double coef;
};

/// Sparse affine expression sum(coef * x[var]) + constant.
struct AffineExpr {
  std::vector<Term> terms;
  double constant = 0.0;

  AffineExpr() = default;
  AffineExpr(double c) : constant(c) {}  // NOLINT(google-explicit-constructor)

  static AffineExpr variable(std::size_t var, double coef = 1.0) {
    AffineExpr e;
    e.terms.push_back({var, coef});
    return e;
  }

  AffineExpr& operator+=(const AffineExpr& o) {
    terms.insert(terms.end(), o.terms.begin(), o.terms.end());
    constant += o.constant;
    return *this;
  }
  AffineExpr& operator-=(const AffineExpr& o) {
    for (const auto& t : o.terms) terms.push_back({t.var, -t.coef});
    constant -= o.constant;
    return *this;
  }
  AffineExpr& operator*=(double s) {
    for (auto& t : terms) t.coef *= s;
    constant *= s;
    return *this;
  }
  AffineExpr& add(std::size_t var, double coef) {
    terms.push_back({var, coef});
    return *this;
  }

  friend AffineExpr operator+(AffineExpr a, const AffineExpr& b) { return a += b; }
  friend AffineExpr operator-(AffineExpr a, const AffineExpr& b) { return a -= b; }
  friend AffineExpr operator*(double s, AffineExpr a) { return a *= s; }
  friend AffineExpr operator-(AffineExpr a) { return a *= -1.0; }

  double evaluate(const std::vector<double>& x) const {
    double v = constant;
    for (const auto& t : terms) v += t.coef * x.at(t.var);
    return v;
  }
};

// ---------------------------------------------------------------------------
// Program
// ---------------------------------------------------------------------------

struct Coefficient {
  std::size_t row;
  std::size_t col;
  double value;
};

struct ConstraintBlock {
  ConeKind cone = ConeKind::Nonnegative;
  std::size_t rows = 0;
  std::vector<Coefficient> coeffs;  // sorted by (row, col), no duplicates
  std::vector<double> offset;       // length `rows`
  std::string label;

  std::size_t psd_order() const { return cone == ConeKind::PsdTriangle ? svec_order(rows) : 0; }

  /// v = A x + b for this block.
  std::vector<double> evaluate(const std::vector<double>& x) const {
    std::vector<double> v = offset;
    for (const auto& c : coeffs) v[c.row] += c.value * x.at(c.col);
    return v;
  }
};

/// Entry of the symmetric matrix Q in the objective term 0.5 * x' Q x.
/// Only entries with row >= col are stored.
struct QuadraticEntry {
  std::size_t row;
  std::size_t col;
  double value;
};

struct ConicProgram {
  std::string name;
  std::map<std::string, std::string> metadata;
  std::size_t num_vars = 0;
  std::vector<std::string> var_names;
  std::vector<double> objective;  // length num_vars
  double objective_offset = 0.0;
  std::vector<QuadraticEntry> quadratic;
  std::vector<ConstraintBlock> blocks;
  std::vector<double> lower;    // length num_vars, -inf when free
  std::vector<double> upper;    // length num_vars, +inf when free
  std::vector<char> integer;    // length num_vars

  bool has_quadratic() const { return !quadratic.empty(); }
  bool has_integers() const {
    return std::any_of(integer.begin(), integer.end(), [](char c) { return c != 0; });
  }
  bool has_finite_bounds() const {
    for (std::size_t j = 0; j < num_vars; ++j) {
      if (std::isfinite(lower[j]) || std::isfinite(upper[j])) return true;
    }
    return false;
  }

  std::string var_name(std::size_t j) const {
    if (j < var_names.size() && !var_names[j].empty()) return var_names[j];
    return "x" + std::to_string(j);
  }

  /// Full objective value at x (linear + constant + quadratic).
  double evaluate_objective(const std::vector<double>& x) const {
    double v = objective_offset;
    for (std::size_t j = 0; j < num_vars; ++j) v += objective[j] * x.at(j);
    for (const auto& q : quadratic) {
      const double f = q.row == q.col ? 0.5 : 1.0;
      v += f * q.value * x.at(q.row) * x.at(q.col);
    }
    return v;
  }
};

// ---------------------------------------------------------------------------
// Builder
// ---------------------------------------------------------------------------

/// Single-owner builder. Variables are plain indices; every expression handed
/// to the builder must refer to registered variables.
class ProgramBuilder {
 public:
  explicit ProgramBuilder(std::string name = {}) { program_.name = std::move(name); }

  std::size_t add_variable(std::string name = {}, double lower = -kInf, double upper = kInf) {
    program_.var_names.push_back(std::move(name));
    program_.objective.push_back(0.0);
    program_.lower.push_back(lower);
    program_.upper.push_back(upper);
    program_.integer.push_back(0);
    return program_.num_vars++;
  }

  std::vector<std::size_t> add_variables(std::size_t count, const std::string& prefix) {
    std::vector<std::size_t> ids;
    ids.reserve(count);
    for (std::size_t i = 0; i < count; ++i) ids.push_back(add_variable(prefix + std::to_string(i)));
    return ids;
  }

  std::size_t num_vars() const { return program_.num_vars; }

  void set_integer(std::size_t var, bool flag = true) {
    check_var(var);
    program_.integer[var] = flag ? 1 : 0;
  }
  void set_bounds(std::size_t var, double lower, double upper) {
    check_var(var);
    program_.lower[var] = lower;
    program_.upper[var] = upper;
  }

  void add_objective(const AffineExpr& e) {
    for (const auto& t : e.terms) {
      check_var(t.var);
      program_.objective[t.var] += t.coef;
    }
    program_.objective_offset += e.constant;
  }

  /// Adds value * x[i] * x[j] to the objective.
  void add_objective_product(std::size_t i, std::size_t j, double value) {
    check_var(i);
    check_var(j);
    if (i < j) std::swap(i, j);
    // 0.5 x'Qx with symmetric Q: diagonal needs Q_ii = 2v, off-diagonal Q_ij = v.
    program_.quadratic.push_back({i, j, i == j ? 2.0 * value : value});
  }

  std::size_t add_block(ConeKind cone, const std::vector<AffineExpr>& rows, std::string label = {}) {
    ConstraintBlock block;
    block.cone = cone;
    block.rows = rows.size();
    block.offset.resize(rows.size());
    block.label = std::move(label);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      block.offset[r] = rows[r].constant;
      for (const auto& t : rows[r].terms) {
        check_var(t.var);
        block.coeffs.push_back({r, t.var, t.coef});
      }
    }
    program_.blocks.push_back(std::move(block));
    return program_.blocks.size() - 1;
  }

  std::size_t add_nonnegative(const AffineExpr& e, std::string label = {}) {
    return add_block(ConeKind::Nonnegative, {e}, std::move(label));
  }
  std::size_t add_equality(const AffineExpr& e, std::string label = {}) {
    return add_block(ConeKind::Zero, {e}, std::move(label));
  }

  /// u * v >= ||w||^2 with u, v >= 0.
  std::size_t add_rotated_cone(const AffineExpr& u, const AffineExpr& v,
                               const std::vector<AffineExpr>& w, std::string label = {}) {
    std::vector<AffineExpr> rows{u, v};
    rows.insert(rows.end(), w.begin(), w.end());
    return add_block(ConeKind::RotatedSecondOrder, rows, std::move(label));
  }

  /// Symmetric matrix of expressions (only the lower triangle is read) must be PSD.
  std::size_t add_psd(const std::vector<std::vector<AffineExpr>>& m, std::string label = {}) {
    const std::size_t k = m.size();
    std::vector<AffineExpr> rows;
    rows.reserve(svec_size(k));
    for (std::size_t j = 0; j < k; ++j) {
      for (std::size_t i = j; i < k; ++i) {
        AffineExpr e = m[i][j];
        if (i != j) e *= kSqrt2;
        rows.push_back(std::move(e));
      }
    }
    return add_block(ConeKind::PsdTriangle, rows, std::move(label));
  }

  void set_metadata(const std::string& key, const std::string& value) {
    program_.metadata[key] = value;
  }

  /// Sorts and merges coefficients; the builder is left empty.
  ConicProgram finalize() {
    for (auto& b : program_.blocks) canonicalize(b);
    canonicalize_quadratic(program_.quadratic);
    return std::move(program_);
  }

  static void canonicalize(ConstraintBlock& b) {
    std::sort(b.coeffs.begin(), b.coeffs.end(), [](const Coefficient& x, const Coefficient& y) {
      return x.row != y.row ? x.row < y.row : x.col < y.col;
    });
    std::vector<Coefficient> merged;
    merged.reserve(b.coeffs.size());
    for (const auto& c : b.coeffs) {
      if (!merged.empty() && merged.back().row == c.row && merged.back().col == c.col) {
        merged.back().value += c.value;
      } else {
        merged.push_back(c);
      }
    }
    merged.erase(std::remove_if(merged.begin(), merged.end(),
                                [](const Coefficient& c) { return c.value == 0.0; }),
                 merged.end());
    b.coeffs = std::move(merged);
  }

  static void canonicalize_quadratic(std::vector<QuadraticEntry>& q) {
    std::sort(q.begin(), q.end(), [](const QuadraticEntry& x, const QuadraticEntry& y) {
      return x.row != y.row ? x.row < y.row : x.col < y.col;
    });
    std::vector<QuadraticEntry> merged;
    for (const auto& e : q) {
      if (!merged.empty() && merged.back().row == e.row && merged.back().col == e.col) {
        merged.back().value += e.value;
      } else {
        merged.push_back(e);
      }
    }
    merged.erase(std::remove_if(merged.begin(), merged.end(),
                                [](const QuadraticEntry& e) { return e.value == 0.0; }),
                 merged.end());
    q = std::move(merged);
  }

 private:
  void check_var(std::size_t var) const {
    if (var >= program_.num_vars) {
      throw Error(ErrorCode::UnregisteredVariable,
                  "variable " + std::to_string(var) + " not registered (num_vars=" +
                      std::to_string(program_.num_vars) + ")");
    }
  }

  ConicProgram program_;
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

struct Defect {
  std::ptrdiff_t block;  // -1 for program-level defects
  std::string rule;
};

inline std::vector<Defect> validate(const ConicProgram& p) {
  std::vector<Defect> out;
  auto program_defect = [&](std::string rule) { out.push_back({-1, std::move(rule)}); };
  const std::size_t n = p.num_vars;
  if (p.objective.size() != n) program_defect("objective length != num_vars");
  if (p.lower.size() != n || p.upper.size() != n) program_defect("bound vectors length != num_vars");
  if (p.integer.size() != n) program_defect("integrality flags length != num_vars");
  if (!std::isfinite(p.objective_offset)) program_defect("non-finite objective offset");
  for (double c : p.objective) {
    if (!std::isfinite(c)) {
      program_defect("non-finite objective coefficient");
      break;
    }
  }
  for (const auto& q : p.quadratic) {
    if (q.row >= n || q.col >= n) program_defect("quadratic entry out of range");
    if (q.row < q.col) program_defect("quadratic entry above the diagonal");
  }
  for (std::size_t j = 0; j < std::min({n, p.lower.size(), p.upper.size()}); ++j) {
    if (p.lower[j] > p.upper[j]) program_defect("lower bound above upper bound for variable " + std::to_string(j));
  }
  for (std::size_t bi = 0; bi < p.blocks.size(); ++bi) {
    const auto& b = p.blocks[bi];
    auto defect = [&](std::string rule) {
      out.push_back({static_cast<std::ptrdiff_t>(bi), std::move(rule)});
    };
    if (b.offset.size() != b.rows) defect("offset length != row count");
    switch (b.cone) {
      case ConeKind::SecondOrder:
        if (b.rows < 1) defect("second-order cone needs at least 1 row");
        break;
      case ConeKind::RotatedSecondOrder:
        if (b.rows < 2) defect("rotated cone needs at least 2 rows");
        break;
      case ConeKind::PsdTriangle: {
        const std::size_t k = svec_order(b.rows);
        if (k == 0 && b.rows != 0) {
          defect("PSD row count " + std::to_string(b.rows) + " is not k(k+1)/2");
        }
        break;
      }
      default: break;
    }
    for (const auto& c : b.coeffs) {
      if (c.col >= n) {
        defect("out-of-range column " + std::to_string(c.col));
        break;
      }
    }
    for (const auto& c : b.coeffs) {
      if (c.row >= b.rows) {
        defect("out-of-range row " + std::to_string(c.row));
        break;
      }
    }
    for (const auto& c : b.coeffs) {
      if (!std::isfinite(c.value)) {
        defect("non-finite coefficient");
        break;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Solutions and residuals
// ---------------------------------------------------------------------------

enum class SolveStatus { Optimal, Infeasible, Unbounded, NumericalFailure };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::NumericalFailure: return "numerical-failure";
  }
  return "?";
}

struct SolverStats {
  int iterations = 0;
  double wall_time = 0.0;  // seconds
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
};

struct Solution {
  SolveStatus status = SolveStatus::NumericalFailure;
  std::vector<double> primal;
  std::vector<std::vector<double>> duals;  // one vector per constraint block
  double objective = 0.0;
  SolverStats stats;
  /// Farkas ray for Infeasible (block-dual layout, flattened) or the primal
  /// improving ray for Unbounded.
  std::vector<double> certificate;
  std::string message;
};

/// Euclidean distance from v to the cone. Rotated cones are measured after
/// the map (u, v, w) -> ((u+v)/sqrt2, (u-v)/sqrt2, sqrt2 w) onto the
/// second-order cone.
inline double cone_distance(ConeKind cone, const std::vector<double>& v) {
  auto soc_distance = [](double t, const Vector& x) {
    const double nx = x.norm();
    if (nx <= t) return 0.0;
    if (nx <= -t) return std::sqrt(t * t + nx * nx);
    return (nx - t) / kSqrt2;
  };
  switch (cone) {
    case ConeKind::Zero: {
      double s = 0.0;
      for (double x : v) s += x * x;
      return std::sqrt(s);
    }
    case ConeKind::Nonnegative: {
      double s = 0.0;
      for (double x : v) {
        if (x < 0) s += x * x;
      }
      return std::sqrt(s);
    }
    case ConeKind::SecondOrder: {
      if (v.empty()) return 0.0;
      Vector x(static_cast<Eigen::Index>(v.size() - 1));
      for (std::size_t i = 1; i < v.size(); ++i) x(static_cast<Eigen::Index>(i - 1)) = v[i];
      return soc_distance(v[0], x);
    }
    case ConeKind::RotatedSecondOrder: {
      Vector x(static_cast<Eigen::Index>(v.size() - 1));
      x(0) = (v[0] - v[1]) / kSqrt2;
      for (std::size_t i = 2; i < v.size(); ++i) x(static_cast<Eigen::Index>(i - 1)) = kSqrt2 * v[i];
      return soc_distance((v[0] + v[1]) / kSqrt2, x);
    }
    case ConeKind::PsdTriangle: {
      if (v.empty()) return 0.0;
      Matrix m = smat(to_vector(v));
      Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
      double s = 0.0;
      for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
        const double l = eig.eigenvalues()(i);
        if (l < 0) s += l * l;
      }
      return std::sqrt(s);
    }
  }
  return 0.0;
}

struct ResidualReport {
  std::vector<double> block;  // distance of A x + b to the block's cone
  double bound = 0.0;         // largest violation of variable bounds
  double objective_delta = 0.0;
  double max() const {
    double m = bound;
    for (double r : block) m = std::max(m, r);
    return m;
  }
};

inline ResidualReport residuals(const ConicProgram& p, const std::vector<double>& x) {
  require_same_size(x.size(), p.num_vars, "residuals: primal length");
  ResidualReport r;
  r.block.reserve(p.blocks.size());
  for (const auto& b : p.blocks) r.block.push_back(cone_distance(b.cone, b.evaluate(x)));
  for (std::size_t j = 0; j < p.num_vars; ++j) {
    r.bound = std::max({r.bound, p.lower[j] - x[j], x[j] - p.upper[j]});
  }
  return r;
}

inline ResidualReport residuals(const ConicProgram& p, const Solution& s) {
  if (s.status != SolveStatus::Optimal) {
    throw Error(ErrorCode::StatusNotOptimal,
                std::string("residuals need an optimal solution, got ") + to_string(s.status));
  }
  ResidualReport r = residuals(p, s.primal);
  r.objective_delta = std::abs(p.evaluate_objective(s.primal) - s.objective);
  return r;
}

}  // namespace rankone
