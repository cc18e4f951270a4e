#pragma once

// Convex hull of the epigraph of (d'x)^2 under sign-indicator constraints.
//
// Two-sided set:  x_i z_i >= 0 and x_i (1 - z_i) <= 0, z binary, t >= (d'x)^2.
// One-sided set:  only x_i (1 - z_i) <= 0.
//
// The hull of the two-sided set is cut out by 0 <= z <= 1 and
//     t >= (d'x)_+^2 / D_+  +  (d'x)_-^2 / D_-
// with D_+ = min{1, sum_{d_i>0} z_i + sum_{d_i<0} (1 - z_i)} and D_- the
// mirrored sum. Indices with d_i == 0 are dropped from both sums.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rankone/conic.hpp"
#include "rankone/error.hpp"
#include "rankone/numeric.hpp"
#include "rankone/solver.hpp"

namespace rankone {

enum class Sidedness { TwoSided, OneSided };

inline const char* to_string(Sidedness s) { return s == Sidedness::TwoSided ? "two-sided" : "one-sided"; }

struct RankOneSet {
  std::vector<double> d;
  Sidedness side = Sidedness::TwoSided;

  RankOneSet() = default;
  RankOneSet(std::vector<double> coeffs, Sidedness s = Sidedness::TwoSided) : d(std::move(coeffs)), side(s) {
    if (d.empty()) throw Error(ErrorCode::DimensionMismatch, "rank-one set needs n >= 1");
    for (double v : d) {
      if (!std::isfinite(v)) throw Error(ErrorCode::InvalidSpec, "non-finite entry in d");
    }
  }

  std::size_t size() const { return d.size(); }

  std::vector<std::size_t> supp_plus() const {
    std::vector<std::size_t> s;
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (d[i] > 0) s.push_back(i);
    }
    return s;
  }
  std::vector<std::size_t> supp_minus() const {
    std::vector<std::size_t> s;
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (d[i] < 0) s.push_back(i);
    }
    return s;
  }
  std::vector<std::size_t> supp() const {
    std::vector<std::size_t> s;
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (d[i] != 0) s.push_back(i);
    }
    return s;
  }

  /// All nonzero entries share one sign (an all-zero d counts as uniform).
  bool sign_uniform() const { return supp_plus().empty() || supp_minus().empty(); }
};

struct HullPoint {
  std::vector<double> x;
  std::vector<double> z;
  double t = 0.0;
};

struct LossParams {
  double d = 1.0;
  double lambda = 1.0;
};

struct LinearObjective {
  std::vector<double> alpha;
  std::vector<double> beta;
  double gamma = 0.0;
};

namespace detail {

inline void check_point(const RankOneSet& set, const std::vector<double>& x, const std::vector<double>& z) {
  require_same_size(x.size(), set.size(), "x length");
  require_same_size(z.size(), set.size(), "z length");
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (!(z[i] >= 0.0 && z[i] <= 1.0)) {
      throw Error(ErrorCode::ZOutOfBounds, "z[" + std::to_string(i) + "] = " + format_double(z[i]));
    }
  }
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// num / den with 0/0 = 0 and num > 0, den == 0 -> +inf.
inline double perspective(double num, double den) {
  if (num == 0.0) return 0.0;
  if (den <= 0.0) return kInf;
  return num / den;
}

}  // namespace detail

/// Denominators (D_+, D_-) of the two-sided hull inequality.
inline std::pair<double, double> hull_denominators(const RankOneSet& set, const std::vector<double>& z) {
  double plus = 0.0;
  double minus = 0.0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (set.d[i] > 0) {
      plus += z[i];
      minus += 1.0 - z[i];
    } else if (set.d[i] < 0) {
      plus += 1.0 - z[i];
      minus += z[i];
    }
  }
  return {std::min(1.0, plus), std::min(1.0, minus)};
}

inline double eval_hull_rhs(const RankOneSet& set, const std::vector<double>& x, const std::vector<double>& z) {
  detail::check_point(set, x, z);
  const double y = detail::dot(set.d, x);
  const auto [dp, dm] = hull_denominators(set, z);
  const double yp = std::max(y, 0.0);
  const double ym = std::min(y, 0.0);
  return detail::perspective(yp * yp, dp) + detail::perspective(ym * ym, dm);
}

inline double eval_one_sided_rhs(const RankOneSet& set, const std::vector<double>& x, const std::vector<double>& z) {
  detail::check_point(set, x, z);
  const double y = detail::dot(set.d, x);
  const double yp = std::max(y, 0.0);
  const double ym = std::min(y, 0.0);
  const bool has_plus = !set.supp_plus().empty();
  const bool has_minus = !set.supp_minus().empty();
  if (has_plus && has_minus) return y * y;
  double sum = 0.0;
  for (std::size_t i : set.supp()) sum += z[i];
  const double den = std::min(1.0, sum);
  if (has_minus) return detail::perspective(ym * ym, den) + yp * yp;  // d <= 0 mirrors d >= 0
  return detail::perspective(yp * yp, den) + ym * ym;
}

inline double eval_rhs(const RankOneSet& set, const std::vector<double>& x, const std::vector<double>& z) {
  return set.side == Sidedness::TwoSided ? eval_hull_rhs(set, x, z) : eval_one_sided_rhs(set, x, z);
}

inline bool check_membership(const RankOneSet& set, const HullPoint& p, double tol = 1e-9) {
  return p.t >= eval_rhs(set, p.x, p.z) - tol;
}

// ---------------------------------------------------------------------------
// Conic representation
// ---------------------------------------------------------------------------

struct HullBlock {
  std::size_t w_plus = 0;
  std::size_t w_minus = 0;
  std::optional<std::size_t> r_plus;
  std::optional<std::size_t> r_minus;
  std::vector<std::size_t> linear_blocks;
  std::vector<std::size_t> cone_blocks;
};

/// Emits t >= RHS for `set` into `b`. The caller keeps 0 <= z <= 1 (bounds
/// or rows); x and t are left free. One-sided sets are handled as well: for
/// sign-uniform d one perspective denominator is fixed to 1, for mixed signs
/// the block reduces to t >= (d'x)^2.
inline HullBlock build_hull_socp(const RankOneSet& set, ProgramBuilder& b, const std::vector<std::size_t>& x,
                                 const std::vector<std::size_t>& z, std::size_t t) {
  require_same_size(x.size(), set.size(), "x handles");
  require_same_size(z.size(), set.size(), "z handles");
  const std::size_t nv = b.num_vars();
  auto check = [&](std::size_t v) {
    if (v >= nv) throw Error(ErrorCode::UnregisteredVariable, "variable " + std::to_string(v) + " not registered");
  };
  for (auto v : x) check(v);
  for (auto v : z) check(v);
  check(t);

  HullBlock hb;
  AffineExpr dx;
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (set.d[i] != 0) dx.add(x[i], set.d[i]);
  }
  const AffineExpr tt = AffineExpr::variable(t);

  if (set.side == Sidedness::OneSided && !set.sign_uniform()) {
    hb.cone_blocks.push_back(b.add_rotated_cone(tt, AffineExpr(1.0), {dx}, "hull: t >= (d'x)^2"));
    return hb;
  }

  hb.w_plus = b.add_variable("hull_w+");
  hb.w_minus = b.add_variable("hull_w-");
  const AffineExpr wp = AffineExpr::variable(hb.w_plus);
  const AffineExpr wm = AffineExpr::variable(hb.w_minus);
  hb.linear_blocks.push_back(b.add_equality(dx - wp - wm, "hull: d'x = w+ + w-"));
  hb.linear_blocks.push_back(b.add_nonnegative(wp, "hull: w+ >= 0"));
  hb.linear_blocks.push_back(b.add_nonnegative(-wm, "hull: w- <= 0"));

  // Sum expressions feeding the perspective denominators.
  AffineExpr sum_plus;
  AffineExpr sum_minus;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const AffineExpr zi = AffineExpr::variable(z[i]);
    if (set.d[i] > 0) {
      sum_plus += zi;
      sum_minus += AffineExpr(1.0) - zi;
    } else if (set.d[i] < 0) {
      sum_plus += AffineExpr(1.0) - zi;
      sum_minus += zi;
    }
  }
  bool perspective_plus = true;
  bool perspective_minus = true;
  if (set.side == Sidedness::OneSided) {
    // Sign-uniform d: the denominator is min{1, sum_{supp} z}; the opposite
    // part carries no perspective term.
    const bool nonneg = set.supp_minus().empty();
    AffineExpr zsum;
    for (std::size_t i : set.supp()) zsum += AffineExpr::variable(z[i]);
    if (nonneg) {
      sum_plus = zsum;
      perspective_minus = false;
    } else {
      sum_minus = zsum;
      perspective_plus = false;
    }
  }

  auto add_side = [&](bool perspective, const AffineExpr& w, const AffineExpr& sum, const char* tag,
                      std::optional<std::size_t>& r_out) {
    if (!perspective) {
      hb.cone_blocks.push_back(b.add_rotated_cone(tt, AffineExpr(1.0), {w}, std::string("hull: t >= w") + tag + "^2"));
      return;
    }
    const std::size_t r = b.add_variable(std::string("hull_r") + tag);
    r_out = r;
    const AffineExpr rr = AffineExpr::variable(r);
    hb.linear_blocks.push_back(b.add_nonnegative(AffineExpr(1.0) - rr, std::string("hull: r") + tag + " <= 1"));
    hb.linear_blocks.push_back(b.add_nonnegative(sum - rr, std::string("hull: r") + tag + " <= sum z"));
    hb.cone_blocks.push_back(b.add_rotated_cone(tt, rr, {w}, std::string("hull: t r") + tag + " >= w^2"));
  };
  add_side(perspective_plus, wp, sum_plus, "+", hb.r_plus);
  add_side(perspective_minus, wm, sum_minus, "-", hb.r_minus);
  return hb;
}

// ---------------------------------------------------------------------------
// Loss induced by the singleton relaxation
// ---------------------------------------------------------------------------

inline void check_loss_params(const LossParams& p) {
  if (!(p.d > 0) || !(p.lambda > 0)) {
    throw Error(ErrorCode::NonPositiveParams, "loss parameters need d > 0 and lambda > 0");
  }
}

inline double phi_loss(double x, const LossParams& p) {
  check_loss_params(p);
  if (x <= 0) return 0.0;
  const double knee = std::sqrt(p.lambda / p.d);
  if (x >= knee) return p.lambda;
  return 2.0 * std::sqrt(p.lambda * p.d) * x - p.d * x * x;
}

inline double phi_argmin_z(double x, const LossParams& p) {
  check_loss_params(p);
  if (x <= 0) return 0.0;
  return std::min(std::sqrt(p.d / p.lambda) * x, 1.0);
}

/// Inner objective  lambda z - d x^2 + d x_+^2 / z + d x_-^2  at a fixed z.
inline double phi_inner(double x, double z, const LossParams& p) {
  const double xp = std::max(x, 0.0);
  const double xm = std::min(x, 0.0);
  return p.lambda * z - p.d * x * x + p.d * detail::perspective(xp * xp, z) + p.d * xm * xm;
}

// ---------------------------------------------------------------------------
// Exact optimization over the integer set
// ---------------------------------------------------------------------------

struct ExactLinearResult {
  bool unbounded = false;
  double value = 0.0;
  std::vector<double> x;
  std::vector<double> z;
  double t = 0.0;
};

namespace detail {

// Sign cone of coordinate i at a binary z: +1 (x_i >= 0), -1 (x_i <= 0), 0 (free).
inline int coordinate_cone(Sidedness side, bool zi) {
  if (side == Sidedness::TwoSided) return zi ? +1 : -1;
  return zi ? 0 : -1;
}

/// Whether some mu puts alpha - mu d in the dual of the coordinate cone.
inline bool dual_interval_nonempty(const std::vector<int>& cone, const std::vector<double>& alpha,
                                   const std::vector<double>& d, double tol) {
  double lo = -kInf;
  double hi = kInf;
  for (std::size_t i = 0; i < cone.size(); ++i) {
    const double a = d[i];
    const double c = alpha[i];
    if (cone[i] == 0) {
      if (a == 0) {
        if (std::abs(c) > tol) return false;
        continue;
      }
      double l = (c - tol) / a;
      double h = (c + tol) / a;
      if (l > h) std::swap(l, h);
      lo = std::max(lo, l);
      hi = std::min(hi, h);
    } else {
      const double s = cone[i];
      // s * (c - mu a) >= -tol
      if (a == 0) {
        if (s * c < -tol) return false;
        continue;
      }
      const double bound = (s * c + tol) / (s * a);
      if (s * a > 0) {
        hi = std::min(hi, bound);
      } else {
        lo = std::max(lo, bound);
      }
    }
  }
  return lo <= hi;
}

}  // namespace detail

/// Exact minimum of alpha'x + beta'z + gamma t over the integer set by
/// enumerating z in {0,1}^n (n <= 20). For each z the inner problem is a
/// one-dimensional quadratic in y = d'x.
inline ExactLinearResult exact_linear_opt(const RankOneSet& set, const LinearObjective& obj) {
  const std::size_t n = set.size();
  if (n > 20) throw Error(ErrorCode::TooLarge, "enumeration oracle supports n <= 20, got " + std::to_string(n));
  require_same_size(obj.alpha.size(), n, "alpha length");
  require_same_size(obj.beta.size(), n, "beta length");

  ExactLinearResult best;
  if (obj.gamma < 0) {
    best.unbounded = true;
    return best;
  }
  double anorm = 0.0;
  for (double a : obj.alpha) anorm += a * a;
  const double tol = 1e-9 * std::sqrt(anorm);

  best.value = kInf;
  // With gamma == 0 the value of d'x is unconstrained, so mu is pinned to 0.
  const std::vector<double> dual_d = obj.gamma > 0 ? set.d : std::vector<double>(n, 0.0);
  std::vector<int> cone(n);
  const std::uint32_t count = 1u << n;
  for (std::uint32_t mask = 0; mask < count; ++mask) {
    double bz = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool zi = (mask >> i) & 1u;
      cone[i] = detail::coordinate_cone(set.side, zi);
      if (zi) bz += obj.beta[i];
    }
    if (!detail::dual_interval_nonempty(cone, obj.alpha, dual_d, tol)) {
      // Some direction with d'x = 0 (or any direction when gamma = 0) lowers
      // the objective without bound.
      best = ExactLinearResult{};
      best.unbounded = true;
      return best;
    }
    double value = bz;
    double y = 0.0;
    std::size_t coord = n;
    if (obj.gamma > 0) {
      // h(+1), h(-1): cheapest ray of the cone reaching d'x = +-1.
      double hp = kInf, hm = kInf;
      std::size_t ip = n, im = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (set.d[i] == 0) continue;
        const double up = 1.0 / set.d[i];  // x_i needed for d'x = +1
        const bool pos_ok = cone[i] == 0 || (cone[i] > 0 && up > 0) || (cone[i] < 0 && up < 0);
        const bool neg_ok = cone[i] == 0 || (cone[i] > 0 && -up > 0) || (cone[i] < 0 && -up < 0);
        if (pos_ok && obj.alpha[i] * up < hp) {
          hp = obj.alpha[i] * up;
          ip = i;
        }
        if (neg_ok && -obj.alpha[i] * up < hm) {
          hm = -obj.alpha[i] * up;
          im = i;
        }
      }
      // min_{y >= 0} h y + gamma y^2 = -h^2 / (4 gamma) at y = -h / (2 gamma) when h < 0.
      double vp = 0.0, vm = 0.0;
      if (ip < n && hp < 0) vp = -hp * hp / (4.0 * obj.gamma);
      if (im < n && hm < 0) vm = -hm * hm / (4.0 * obj.gamma);
      if (vp < vm) {
        value += vp;
        y = -hp / (2.0 * obj.gamma);
        coord = ip;
      } else if (vm < 0) {
        value += vm;
        y = hm / (2.0 * obj.gamma);
        coord = im;
      }
    }
    if (value < best.value) {
      best.value = value;
      best.x.assign(n, 0.0);
      if (coord < n) best.x[coord] = y / set.d[coord];
      best.z.assign(n, 0.0);
      for (std::size_t i = 0; i < n; ++i) best.z[i] = ((mask >> i) & 1u) ? 1.0 : 0.0;
      best.t = y * y;
    }
  }
  return best;
}

/// Program  min alpha'x + beta'z + gamma t  over the conic hull block with
/// 0 <= z <= 1.
inline ConicProgram hull_program(const RankOneSet& set, const LinearObjective& obj) {
  const std::size_t n = set.size();
  require_same_size(obj.alpha.size(), n, "alpha length");
  require_same_size(obj.beta.size(), n, "beta length");
  ProgramBuilder b("hull");
  std::vector<std::size_t> x, z;
  for (std::size_t i = 0; i < n; ++i) x.push_back(b.add_variable("x" + std::to_string(i)));
  for (std::size_t i = 0; i < n; ++i) z.push_back(b.add_variable("z" + std::to_string(i), 0.0, 1.0));
  const std::size_t t = b.add_variable("t");
  build_hull_socp(set, b, x, z, t);
  AffineExpr o;
  for (std::size_t i = 0; i < n; ++i) {
    o.add(x[i], obj.alpha[i]);
    o.add(z[i], obj.beta[i]);
  }
  o.add(t, obj.gamma);
  b.add_objective(o);
  return b.finalize();
}

/// Optimal value over the relaxation, or nullopt when it is unbounded.
/// Throws StatusNotOptimal on any other solver outcome.
inline std::optional<double> optimize_over_hull(const RankOneSet& set, const LinearObjective& obj,
                                                const SolverConfig& cfg = {}) {
  const ConicProgram p = hull_program(set, obj);
  const Solution s = solve(p, cfg);
  if (s.status == SolveStatus::Unbounded) return std::nullopt;
  if (s.status != SolveStatus::Optimal) {
    throw Error(ErrorCode::StatusNotOptimal, std::string("hull solve ended ") + to_string(s.status));
  }
  return s.objective;
}

}  // namespace rankone
