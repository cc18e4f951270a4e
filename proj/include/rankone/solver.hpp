#pragma once

// Primal-dual interior-point solver for programs over products of the
// nonnegative orthant, second-order cones and PSD cones.
//
// The program is first lowered to the standard form
//     minimize c'x  subject to  G x + s = h,  A x = b,  s in K
// and then solved through the homogeneous self-dual embedding with
// Nesterov-Todd scaling and a Mehrotra predictor-corrector. KKT systems are
// quasi-definite and factored with a sparse LDL' plus iterative refinement.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "rankone/conic.hpp"
#include "rankone/error.hpp"
#include "rankone/numeric.hpp"

namespace rankone {

struct SolverConfig {
  double tolerance = 1e-8;
  int max_iterations = 100;
  double time_limit = 60.0;  // seconds
  int verbosity = 0;
  /// Replace 2x2 PSD blocks by rotated second-order cones before solving.
  bool lower_psd2 = true;
};

namespace detail {

enum class SegKind { Orthant, Soc, Psd };

struct Segment {
  SegKind kind;
  std::size_t offset;  // first row in G / s / z
  std::size_t dim;     // number of rows
  std::size_t order;   // PSD order, 0 otherwise
};

enum class BlockMap { Equality, Direct, Rotated, Psd2, Empty };

struct BlockRecovery {
  BlockMap map = BlockMap::Empty;
  std::size_t start = 0;  // first row in A (Equality) or in G
  std::size_t rows = 0;   // rows of the original block
};

/// Lowered standard form. Rows of G are grouped: orthant rows first, then
/// second-order cones, then PSD cones.
struct StandardForm {
  std::size_t n = 0;  // variables incl. the quadratic epigraph variable
  std::size_t original_vars = 0;
  Vector c;
  double offset = 0.0;
  Eigen::SparseMatrix<double> A;
  Vector b;
  Eigen::SparseMatrix<double> G;
  Vector h;
  std::vector<Segment> segments;
  std::vector<BlockRecovery> recovery;
};

using Triplet = Eigen::Triplet<double>;

struct RowBuffer {
  std::vector<Triplet> entries;  // row index local to the buffer
  std::vector<double> rhs;
  std::size_t rows = 0;

  // Appends the row  -coeffs' x  with rhs `offset`, i.e. the cone slack is
  // s = offset + coeffs' x, which matches G x + s = h with G = -coeffs.
  void append(const std::vector<std::pair<std::size_t, double>>& coeffs, double offset) {
    for (const auto& [col, val] : coeffs) {
      entries.emplace_back(static_cast<int>(rows), static_cast<int>(col), -val);
    }
    rhs.push_back(offset);
    ++rows;
  }
};

inline std::vector<std::vector<std::pair<std::size_t, double>>> block_rows(const ConstraintBlock& b) {
  std::vector<std::vector<std::pair<std::size_t, double>>> rows(b.rows);
  for (const auto& c : b.coeffs) rows[c.row].emplace_back(c.col, c.value);
  return rows;
}

inline std::vector<std::pair<std::size_t, double>> combine(
    const std::vector<std::pair<std::size_t, double>>& r1, double a1,
    const std::vector<std::pair<std::size_t, double>>& r2, double a2) {
  std::vector<std::pair<std::size_t, double>> out;
  out.reserve(r1.size() + r2.size());
  for (const auto& [c, v] : r1) out.emplace_back(c, a1 * v);
  for (const auto& [c, v] : r2) out.emplace_back(c, a2 * v);
  return out;
}

inline std::vector<std::pair<std::size_t, double>> scaled(
    const std::vector<std::pair<std::size_t, double>>& r, double a) {
  std::vector<std::pair<std::size_t, double>> out;
  out.reserve(r.size());
  for (const auto& [c, v] : r) out.emplace_back(c, a * v);
  return out;
}

inline StandardForm lower_program(const ConicProgram& p, const SolverConfig& cfg) {
  StandardForm sf;
  sf.original_vars = p.num_vars;
  sf.offset = p.objective_offset;

  // Convex quadratic objective: 0.5 x'Qx <= q via  q * 1 >= ||F x||^2.
  Matrix F;
  std::vector<std::size_t> quad_vars;
  if (p.has_quadratic()) {
    std::vector<int> local(p.num_vars, -1);
    for (const auto& e : p.quadratic) {
      for (std::size_t v : {e.row, e.col}) {
        if (local[v] < 0) {
          local[v] = static_cast<int>(quad_vars.size());
          quad_vars.push_back(v);
        }
      }
    }
    const auto k = static_cast<Eigen::Index>(quad_vars.size());
    Matrix Q = Matrix::Zero(k, k);
    for (const auto& e : p.quadratic) {
      const int i = local[e.row];
      const int j = local[e.col];
      Q(i, j) = e.value;
      Q(j, i) = e.value;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(Q);
    const double scale = std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
    if (eig.eigenvalues()(0) < -1e-9 * scale) {
      throw Error(ErrorCode::InvalidSpec, "quadratic objective is not convex");
    }
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < k; ++i) {
      if (eig.eigenvalues()(i) > 1e-12 * scale) keep.push_back(i);
    }
    F.resize(static_cast<Eigen::Index>(keep.size()), k);
    for (std::size_t r = 0; r < keep.size(); ++r) {
      const double s = std::sqrt(0.5 * eig.eigenvalues()(keep[r]));
      F.row(static_cast<Eigen::Index>(r)) = s * eig.eigenvectors().col(keep[r]).transpose();
    }
  }
  const bool epigraph = F.rows() > 0;
  sf.n = p.num_vars + (epigraph ? 1 : 0);
  const std::size_t epi = p.num_vars;

  sf.c = Vector::Zero(static_cast<Eigen::Index>(sf.n));
  for (std::size_t j = 0; j < p.num_vars; ++j) sf.c(static_cast<Eigen::Index>(j)) = p.objective[j];
  if (epigraph) sf.c(static_cast<Eigen::Index>(epi)) = 1.0;

  RowBuffer eq;
  RowBuffer orth;
  struct ConeRows {
    SegKind kind;
    std::size_t order;
    RowBuffer rows;
    std::size_t block;  // original block or npos
  };
  std::vector<ConeRows> cones;
  constexpr std::size_t npos = static_cast<std::size_t>(-1);
  sf.recovery.resize(p.blocks.size());

  for (std::size_t bi = 0; bi < p.blocks.size(); ++bi) {
    const auto& blk = p.blocks[bi];
    auto rows = block_rows(blk);
    auto& rec = sf.recovery[bi];
    rec.rows = blk.rows;
    if (blk.rows == 0) {
      rec.map = BlockMap::Empty;
      continue;
    }
    switch (blk.cone) {
      case ConeKind::Zero:
        rec.map = BlockMap::Equality;
        rec.start = eq.rows;
        for (std::size_t r = 0; r < blk.rows; ++r) {
          // A x = b  with  A = coeffs, b = -offset.
          for (const auto& [col, val] : rows[r]) {
            eq.entries.emplace_back(static_cast<int>(eq.rows), static_cast<int>(col), val);
          }
          eq.rhs.push_back(-blk.offset[r]);
          ++eq.rows;
        }
        break;
      case ConeKind::Nonnegative:
        rec.map = BlockMap::Direct;
        rec.start = orth.rows;  // patched below
        for (std::size_t r = 0; r < blk.rows; ++r) orth.append(rows[r], blk.offset[r]);
        break;
      case ConeKind::SecondOrder: {
        ConeRows cr{SegKind::Soc, 0, {}, bi};
        for (std::size_t r = 0; r < blk.rows; ++r) cr.rows.append(rows[r], blk.offset[r]);
        rec.map = BlockMap::Direct;
        cones.push_back(std::move(cr));
        break;
      }
      case ConeKind::RotatedSecondOrder: {
        ConeRows cr{SegKind::Soc, 0, {}, bi};
        cr.rows.append(combine(rows[0], 0.5, rows[1], 0.5), 0.5 * (blk.offset[0] + blk.offset[1]));
        cr.rows.append(combine(rows[0], 0.5, rows[1], -0.5), 0.5 * (blk.offset[0] - blk.offset[1]));
        for (std::size_t r = 2; r < blk.rows; ++r) cr.rows.append(rows[r], blk.offset[r]);
        rec.map = BlockMap::Rotated;
        cones.push_back(std::move(cr));
        break;
      }
      case ConeKind::PsdTriangle: {
        const std::size_t k = blk.psd_order();
        if (k == 1) {
          rec.map = BlockMap::Direct;
          rec.start = orth.rows;
          orth.append(rows[0], blk.offset[0]);
        } else if (k == 2 && cfg.lower_psd2) {
          // svec = (a, sqrt2 g, c): PSD  <=>  a * c >= g^2, a, c >= 0.
          ConeRows cr{SegKind::Soc, 0, {}, bi};
          cr.rows.append(combine(rows[0], 0.5, rows[2], 0.5), 0.5 * (blk.offset[0] + blk.offset[2]));
          cr.rows.append(combine(rows[0], 0.5, rows[2], -0.5), 0.5 * (blk.offset[0] - blk.offset[2]));
          cr.rows.append(scaled(rows[1], 1.0 / kSqrt2), blk.offset[1] / kSqrt2);
          rec.map = BlockMap::Psd2;
          cones.push_back(std::move(cr));
        } else {
          ConeRows cr{SegKind::Psd, k, {}, bi};
          for (std::size_t r = 0; r < blk.rows; ++r) cr.rows.append(rows[r], blk.offset[r]);
          rec.map = BlockMap::Direct;
          cones.push_back(std::move(cr));
        }
        break;
      }
    }
  }
  // Variable bounds.
  for (std::size_t j = 0; j < p.num_vars; ++j) {
    if (std::isfinite(p.lower[j])) orth.append({{j, 1.0}}, -p.lower[j]);
    if (std::isfinite(p.upper[j])) orth.append({{j, -1.0}}, p.upper[j]);
  }
  if (epigraph) {
    ConeRows cr{SegKind::Soc, 0, {}, npos};
    // (q, 1, F x) rotated -> ((q+1)/2, (q-1)/2, F x)
    cr.rows.append({{epi, 0.5}}, 0.5);
    cr.rows.append({{epi, 0.5}}, -0.5);
    for (Eigen::Index r = 0; r < F.rows(); ++r) {
      std::vector<std::pair<std::size_t, double>> row;
      for (Eigen::Index c = 0; c < F.cols(); ++c) {
        if (F(r, c) != 0.0) row.emplace_back(quad_vars[static_cast<std::size_t>(c)], F(r, c));
      }
      cr.rows.append(row, 0.0);
    }
    cones.push_back(std::move(cr));
  }
  // Order second-order cones before PSD cones.
  std::stable_sort(cones.begin(), cones.end(), [](const ConeRows& a, const ConeRows& b) {
    return a.kind == SegKind::Soc && b.kind == SegKind::Psd;
  });

  std::size_t m = orth.rows;
  for (const auto& cr : cones) m += cr.rows.rows;
  std::vector<Triplet> gt = orth.entries;
  sf.h = Vector::Zero(static_cast<Eigen::Index>(m));
  for (std::size_t r = 0; r < orth.rows; ++r) sf.h(static_cast<Eigen::Index>(r)) = orth.rhs[r];
  if (orth.rows > 0) sf.segments.push_back({SegKind::Orthant, 0, orth.rows, 0});
  std::size_t pos = orth.rows;
  for (const auto& cr : cones) {
    for (const auto& t : cr.rows.entries) {
      gt.emplace_back(static_cast<int>(pos) + t.row(), t.col(), t.value());
    }
    for (std::size_t r = 0; r < cr.rows.rows; ++r) sf.h(static_cast<Eigen::Index>(pos + r)) = cr.rows.rhs[r];
    sf.segments.push_back({cr.kind, pos, cr.rows.rows, cr.order});
    if (cr.block != npos) sf.recovery[cr.block].start = pos;
    pos += cr.rows.rows;
  }
  sf.G.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(sf.n));
  sf.G.setFromTriplets(gt.begin(), gt.end());
  sf.A.resize(static_cast<Eigen::Index>(eq.rows), static_cast<Eigen::Index>(sf.n));
  sf.A.setFromTriplets(eq.entries.begin(), eq.entries.end());
  sf.b = to_vector(eq.rhs);
  return sf;
}

// ---------------------------------------------------------------------------
// Cone algebra
// ---------------------------------------------------------------------------

using Seg = Eigen::Ref<const Vector>;

inline double soc_det(const Seg& u) {
  const double t = u(0);
  const double r = u.tail(u.size() - 1).norm();
  return (t - r) * (t + r);
}

/// Smallest alpha >= 0 with q(alpha) = 0 where q(a) = det(u + a d); +inf if none.
inline double soc_max_step(const Seg& u, const Seg& d) {
  const auto tail = u.size() - 1;
  const double a = d(0) * d(0) - d.tail(tail).squaredNorm();
  const double b = u(0) * d(0) - u.tail(tail).dot(d.tail(tail));
  const double c = soc_det(u);
  if (c <= 0) return 0.0;
  double best = kInf;
  if (std::abs(a) < 1e-300) {
    if (b < 0) best = -c / (2 * b);
    return best;
  }
  const double disc = b * b - a * c;
  if (disc < 0) return kInf;
  const double sq = std::sqrt(disc);
  const double q = -(b + (b >= 0 ? sq : -sq));
  for (double r : {q / a, q != 0.0 ? c / q : kInf}) {
    if (r > 0 && r < best) best = r;
  }
  return best;
}

inline double psd_max_step_diag(const Seg& lambda_diag, const Seg& d) {
  Matrix D = smat(d);
  const auto k = D.rows();
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) D(i, j) /= std::sqrt(lambda_diag(i) * lambda_diag(j));
  }
  const double mn = min_eigenvalue(D);
  return mn < 0 ? -1.0 / mn : kInf;
}

/// Scaling point data for one segment.
struct SegScaling {
  Vector w;     // orthant: diagonal of W
  Matrix W;     // SOC / PSD: dense W on the segment
  Matrix Winv;  // SOC / PSD: its inverse, formed in closed form
  Vector sigma; // PSD: diagonal of lambda
};

struct Scaling {
  std::vector<SegScaling> seg;
  Vector lambda;
};

inline Vector jordan_identity(const Segment& s) {
  Vector e = Vector::Zero(static_cast<Eigen::Index>(s.dim));
  switch (s.kind) {
    case SegKind::Orthant: e.setOnes(); break;
    case SegKind::Soc: e(0) = 1.0; break;
    case SegKind::Psd: e = svec(Matrix::Identity(static_cast<Eigen::Index>(s.order), static_cast<Eigen::Index>(s.order))); break;
  }
  return e;
}

inline Vector identity_vector(const std::vector<Segment>& segs, std::size_t m) {
  Vector e = Vector::Zero(static_cast<Eigen::Index>(m));
  for (const auto& s : segs) e.segment(static_cast<Eigen::Index>(s.offset), static_cast<Eigen::Index>(s.dim)) = jordan_identity(s);
  return e;
}

inline std::size_t degree(const std::vector<Segment>& segs) {
  std::size_t nu = 0;
  for (const auto& s : segs) {
    nu += s.kind == SegKind::Orthant ? s.dim : (s.kind == SegKind::Soc ? 1 : s.order);
  }
  return nu;
}

/// Smallest alpha with u + alpha e in the cone boundary (max violation).
inline double max_violation(const std::vector<Segment>& segs, const Vector& u) {
  double worst = -kInf;
  for (const auto& s : segs) {
    auto v = u.segment(static_cast<Eigen::Index>(s.offset), static_cast<Eigen::Index>(s.dim));
    switch (s.kind) {
      case SegKind::Orthant: worst = std::max(worst, -v.minCoeff()); break;
      case SegKind::Soc: worst = std::max(worst, v.tail(v.size() - 1).norm() - v(0)); break;
      case SegKind::Psd: worst = std::max(worst, -min_eigenvalue(smat(v))); break;
    }
  }
  return worst;
}

inline Vector jordan_product(const std::vector<Segment>& segs, const Vector& u, const Vector& v) {
  Vector out(u.size());
  for (const auto& s : segs) {
    const auto off = static_cast<Eigen::Index>(s.offset);
    const auto dim = static_cast<Eigen::Index>(s.dim);
    auto a = u.segment(off, dim);
    auto b = v.segment(off, dim);
    switch (s.kind) {
      case SegKind::Orthant: out.segment(off, dim) = a.cwiseProduct(b); break;
      case SegKind::Soc:
        out(off) = a.dot(b);
        out.segment(off + 1, dim - 1) = a(0) * b.tail(dim - 1) + b(0) * a.tail(dim - 1);
        break;
      case SegKind::Psd: {
        Matrix A = smat(a);
        Matrix B = smat(b);
        Matrix P = 0.5 * (A * B + B * A);
        out.segment(off, dim) = svec(P);
        break;
      }
    }
  }
  return out;
}

/// Solves lambda o x = d for x, segment by segment.
inline Vector jordan_solve(const std::vector<Segment>& segs, const Scaling& sc, const Vector& d) {
  Vector out(d.size());
  const Vector& lam = sc.lambda;
  for (std::size_t k = 0; k < segs.size(); ++k) {
    const auto& s = segs[k];
    const auto off = static_cast<Eigen::Index>(s.offset);
    const auto dim = static_cast<Eigen::Index>(s.dim);
    auto l = lam.segment(off, dim);
    auto dd = d.segment(off, dim);
    switch (s.kind) {
      case SegKind::Orthant: out.segment(off, dim) = dd.cwiseQuotient(l); break;
      case SegKind::Soc: {
        const double det = soc_det(l);
        const double u0 = (l(0) * dd(0) - l.tail(dim - 1).dot(dd.tail(dim - 1))) / det;
        out(off) = u0;
        out.segment(off + 1, dim - 1) = (dd.tail(dim - 1) - u0 * l.tail(dim - 1)) / l(0);
        break;
      }
      case SegKind::Psd: {
        Matrix D = smat(dd);
        const Vector& sig = sc.seg[k].sigma;
        for (Eigen::Index i = 0; i < D.rows(); ++i) {
          for (Eigen::Index j = 0; j < D.cols(); ++j) D(i, j) *= 2.0 / (sig(i) + sig(j));
        }
        out.segment(off, dim) = svec(D);
        break;
      }
    }
  }
  return out;
}

/// Nesterov-Todd scaling at (s, z). Returns false when a point left the cone.
inline bool compute_scaling(const std::vector<Segment>& segs, const Vector& s, const Vector& z, Scaling& sc) {
  sc.seg.assign(segs.size(), {});
  sc.lambda.resize(s.size());
  for (std::size_t k = 0; k < segs.size(); ++k) {
    const auto& g = segs[k];
    const auto off = static_cast<Eigen::Index>(g.offset);
    const auto dim = static_cast<Eigen::Index>(g.dim);
    auto ss = s.segment(off, dim);
    auto zz = z.segment(off, dim);
    auto& out = sc.seg[k];
    switch (g.kind) {
      case SegKind::Orthant:
        if (ss.minCoeff() <= 0 || zz.minCoeff() <= 0) return false;
        out.w = (ss.cwiseQuotient(zz)).cwiseSqrt();
        sc.lambda.segment(off, dim) = (ss.cwiseProduct(zz)).cwiseSqrt();
        break;
      case SegKind::Soc: {
        const double sdet = soc_det(ss);
        const double zdet = soc_det(zz);
        if (!(sdet > 0) || !(zdet > 0) || ss(0) <= 0 || zz(0) <= 0) return false;
        Vector sb = ss / std::sqrt(sdet);
        Vector zb = zz / std::sqrt(zdet);
        const double gamma = std::sqrt(0.5 * (1.0 + sb.dot(zb)));
        Vector wb = sb;
        wb(0) += zb(0);
        wb.tail(dim - 1) -= zb.tail(dim - 1);
        wb /= 2.0 * gamma;
        const double eta = std::pow(sdet / zdet, 0.25);
        Matrix W(dim, dim);
        W(0, 0) = wb(0);
        W.block(0, 1, 1, dim - 1) = wb.tail(dim - 1).transpose();
        W.block(1, 0, dim - 1, 1) = wb.tail(dim - 1);
        W.block(1, 1, dim - 1, dim - 1) =
            Matrix::Identity(dim - 1, dim - 1) + wb.tail(dim - 1) * wb.tail(dim - 1).transpose() / (1.0 + wb(0));
        out.W = eta * W;
        // inverse of the hyperbolic factor is J Wbar J
        W.block(0, 1, 1, dim - 1) *= -1.0;
        W.block(1, 0, dim - 1, 1) *= -1.0;
        out.Winv = W / eta;
        sc.lambda.segment(off, dim) = out.W * zz;
        break;
      }
      case SegKind::Psd: {
        Eigen::LLT<Matrix> ls(smat(ss));
        Eigen::LLT<Matrix> lz(smat(zz));
        if (ls.info() != Eigen::Success || lz.info() != Eigen::Success) return false;
        Matrix Ls = ls.matrixL();
        Matrix Lz = lz.matrixL();
        Eigen::JacobiSVD<Matrix> svd(Lz.transpose() * Ls, Eigen::ComputeFullU | Eigen::ComputeFullV);
        const Vector sig = svd.singularValues();
        if (sig.minCoeff() <= 0) return false;
        const Vector isq = sig.cwiseSqrt().cwiseInverse();
        const Matrix R = Ls * svd.matrixV() * isq.asDiagonal();
        // R^{-1} = diag(sqrt(sig)) V' Ls^{-1}
        const Matrix Rinv = sig.cwiseSqrt().asDiagonal() * svd.matrixV().transpose() *
                            ls.matrixL().solve(Matrix::Identity(Ls.rows(), Ls.cols()));
        const auto ord = static_cast<Eigen::Index>(g.order);
        Matrix W(dim, dim);
        Matrix Wi(dim, dim);
        for (Eigen::Index col = 0; col < dim; ++col) {
          Vector e = Vector::Zero(dim);
          e(col) = 1.0;
          const Matrix E = smat(e);
          W.col(col) = svec(R.transpose() * E * R);
          Wi.col(col) = svec(Rinv.transpose() * E * Rinv);
        }
        out.W = W;
        out.Winv = Wi;
        out.sigma = sig;
        Matrix L = Matrix::Zero(ord, ord);
        L.diagonal() = sig;
        sc.lambda.segment(off, dim) = svec(L);
        break;
      }
    }
  }
  return true;
}

inline Vector apply_W(const std::vector<Segment>& segs, const Scaling& sc, const Vector& v, bool transpose) {
  Vector out(v.size());
  for (std::size_t k = 0; k < segs.size(); ++k) {
    const auto& g = segs[k];
    const auto off = static_cast<Eigen::Index>(g.offset);
    const auto dim = static_cast<Eigen::Index>(g.dim);
    if (g.kind == SegKind::Orthant) {
      out.segment(off, dim) = sc.seg[k].w.cwiseProduct(v.segment(off, dim));
    } else if (transpose) {
      out.segment(off, dim) = sc.seg[k].W.transpose() * v.segment(off, dim);
    } else {
      out.segment(off, dim) = sc.seg[k].W * v.segment(off, dim);
    }
  }
  return out;
}

/// Largest alpha keeping lambda + alpha * d inside the cone (scaled space).
inline double scaled_max_step(const std::vector<Segment>& segs, const Scaling& sc, const Vector& d) {
  double alpha = kInf;
  for (std::size_t k = 0; k < segs.size(); ++k) {
    const auto& g = segs[k];
    const auto off = static_cast<Eigen::Index>(g.offset);
    const auto dim = static_cast<Eigen::Index>(g.dim);
    auto l = sc.lambda.segment(off, dim);
    auto dd = d.segment(off, dim);
    switch (g.kind) {
      case SegKind::Orthant:
        for (Eigen::Index i = 0; i < dim; ++i) {
          if (dd(i) < 0) alpha = std::min(alpha, -l(i) / dd(i));
        }
        break;
      case SegKind::Soc: alpha = std::min(alpha, soc_max_step(l, dd)); break;
      case SegKind::Psd: alpha = std::min(alpha, psd_max_step_diag(sc.seg[k].sigma, dd)); break;
    }
  }
  return alpha;
}

// ---------------------------------------------------------------------------
// KKT system
// ---------------------------------------------------------------------------

/// KKT system in scaled form: with v = W dz the third block row becomes
/// W^{-T} G dx - v = W^{-T} r_z, leaving -I in the corner.
class KktSystem {
 public:
  KktSystem(const StandardForm& sf, double reg) : sf_(sf), reg_(reg) {
    n_ = static_cast<Eigen::Index>(sf.n);
    p_ = sf.A.rows();
    m_ = sf.G.rows();
  }

  Eigen::Index size() const { return n_ + p_ + m_; }

  bool factor(const Scaling& sc) {
    std::vector<Triplet> wt;
    Winv_.assign(sf_.segments.size(), Matrix());
    for (std::size_t k = 0; k < sf_.segments.size(); ++k) {
      const auto& g = sf_.segments[k];
      const auto off = static_cast<Eigen::Index>(g.offset);
      const auto dim = static_cast<Eigen::Index>(g.dim);
      if (g.kind == SegKind::Orthant) {
        for (Eigen::Index i = 0; i < dim; ++i) wt.emplace_back(off + i, off + i, 1.0 / sc.seg[k].w(i));
      } else {
        Winv_[k] = sc.seg[k].Winv.size() ? sc.seg[k].Winv : Matrix(sc.seg[k].W.partialPivLu().inverse());
        if (!Winv_[k].allFinite()) return false;
        for (Eigen::Index j = 0; j < dim; ++j) {
          for (Eigen::Index i = 0; i < dim; ++i) wt.emplace_back(off + i, off + j, Winv_[k](j, i));
        }
      }
    }
    Eigen::SparseMatrix<double> WinvT(m_, m_);
    WinvT.setFromTriplets(wt.begin(), wt.end());
    Gs_ = WinvT * sf_.G;

    // Unknowns ordered (v, x, y): eliminating the -I block first leaves
    // G~'G~ + reg on x, which stays positive definite.
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(n_ + p_ + m_ + sf_.A.nonZeros() + Gs_.nonZeros()));
    for (Eigen::Index i = 0; i < m_; ++i) t.emplace_back(i, i, -1.0);
    for (int k = 0; k < Gs_.outerSize(); ++k) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(Gs_, k); it; ++it) {
        t.emplace_back(m_ + it.col(), it.row(), it.value());
      }
    }
    // Regularization relative to the column scale survives cancellation.
    Vector colsq = Vector::Zero(n_);
    for (int k = 0; k < Gs_.outerSize(); ++k) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(Gs_, k); it; ++it) colsq(it.col()) += it.value() * it.value();
    }
    for (Eigen::Index i = 0; i < n_; ++i) t.emplace_back(m_ + i, m_ + i, reg_ * (1.0 + colsq(i)));
    for (int k = 0; k < sf_.A.outerSize(); ++k) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(sf_.A, k); it; ++it) {
        t.emplace_back(m_ + n_ + it.row(), m_ + it.col(), it.value());
      }
    }
    for (Eigen::Index i = 0; i < p_; ++i) t.emplace_back(m_ + n_ + i, m_ + n_ + i, -reg_);
    scaling_ = &sc;
    K_.resize(size(), size());
    K_.setFromTriplets(t.begin(), t.end());
    ldlt_.analyzePattern(K_);
    ldlt_.factorize(K_);
    return ldlt_.info() == Eigen::Success;
  }

  /// W^{-T} v
  Vector scale(const Vector& v) const { return apply_winv(v, true); }

  /// Solves [[0, A', G'], [A, 0, 0], [G, 0, -W'W]] u = rhs.
  Vector solve(const Vector& rhs, int refine_steps = 8) const {
    Vector r = rhs;
    r.tail(m_) = apply_winv(rhs.tail(m_), true);
    Vector u = unpermute(ldlt_.solve(permute(r)));
    const double rn = std::max(1.0, r.lpNorm<Eigen::Infinity>());
    for (int it = 0; it < refine_steps; ++it) {
      const Vector res = r - multiply_scaled(u);
      if (res.lpNorm<Eigen::Infinity>() <= 1e-14 * rn) break;
      u += unpermute(ldlt_.solve(permute(res)));
    }
    u.tail(m_) = apply_winv(u.tail(m_), false);
    return u;
  }

 private:
  /// (x, y, v) -> (v, x, y)
  Vector permute(const Vector& u) const {
    Vector out(u.size());
    out << u.tail(m_), u.head(n_ + p_);
    return out;
  }
  Vector unpermute(const Vector& u) const {
    Vector out(u.size());
    out << u.tail(n_ + p_), u.head(m_);
    return out;
  }

  /// Exact (unregularized) scaled K times u.
  Vector multiply_scaled(const Vector& u) const {
    const Vector ux = u.head(n_);
    const Vector uy = u.segment(n_, p_);
    const Vector uv = u.tail(m_);
    Vector out(size());
    out.head(n_) = sf_.A.transpose() * uy + Gs_.transpose() * uv;
    out.segment(n_, p_) = sf_.A * ux;
    out.tail(m_) = Gs_ * ux - uv;
    return out;
  }

  Vector apply_winv(const Vector& v, bool transpose) const {
    Vector out(v.size());
    for (std::size_t k = 0; k < sf_.segments.size(); ++k) {
      const auto& g = sf_.segments[k];
      const auto off = static_cast<Eigen::Index>(g.offset);
      const auto dim = static_cast<Eigen::Index>(g.dim);
      if (g.kind == SegKind::Orthant) {
        out.segment(off, dim) = v.segment(off, dim).cwiseQuotient(scaling_->seg[k].w);
      } else if (transpose) {
        out.segment(off, dim) = Winv_[k].transpose() * v.segment(off, dim);
      } else {
        out.segment(off, dim) = Winv_[k] * v.segment(off, dim);
      }
    }
    return out;
  }

  const StandardForm& sf_;
  double reg_;
  Eigen::Index n_, p_, m_;
  Eigen::SparseMatrix<double> K_;
  Eigen::SparseMatrix<double> Gs_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::NaturalOrdering<int>> ldlt_;
  std::vector<Matrix> Winv_;
  const Scaling* scaling_ = nullptr;
};

struct Iterate {
  Vector x, y, z, s;
  double tau = 1.0, kappa = 1.0;
};

struct IpmResult {
  SolveStatus status = SolveStatus::NumericalFailure;
  Iterate it;
  SolverStats stats;
  std::string message;
};

inline IpmResult run_ipm(const StandardForm& sf, const SolverConfig& cfg) {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  const double tol = cfg.tolerance;
  IpmResult res;
  const auto n = static_cast<Eigen::Index>(sf.n);
  const auto p = sf.A.rows();
  const auto m = sf.G.rows();
  const auto& segs = sf.segments;
  const std::size_t nu = degree(segs);
  const Vector e = identity_vector(segs, static_cast<std::size_t>(m));

  Iterate& it = res.it;
  it.x = Vector::Zero(n);
  it.y = Vector::Zero(p);
  it.z = Vector::Zero(m);
  it.s = Vector::Zero(m);

  if (m == 0 && p == 0) {
    if (sf.c.norm() == 0.0) {
      res.status = SolveStatus::Optimal;
    } else {
      res.status = SolveStatus::Unbounded;
      it.x = -sf.c / sf.c.squaredNorm();
    }
    return res;
  }

  KktSystem kkt(sf, 1e-12);
  // Initial point from the W = I system.
  Scaling sc;
  sc.seg.resize(segs.size());
  sc.lambda = e;
  for (std::size_t k = 0; k < segs.size(); ++k) {
    const auto dim = static_cast<Eigen::Index>(segs[k].dim);
    if (segs[k].kind == SegKind::Orthant) {
      sc.seg[k].w = Vector::Ones(dim);
    } else {
      sc.seg[k].W = Matrix::Identity(dim, dim);
      if (segs[k].kind == SegKind::Psd) sc.seg[k].sigma = Vector::Ones(static_cast<Eigen::Index>(segs[k].order));
    }
  }
  if (!kkt.factor(sc)) {
    res.message = "initial KKT factorization failed";
    return res;
  }
  {
    Vector rhs = Vector::Zero(kkt.size());
    rhs.segment(n, p) = sf.b;
    rhs.tail(m) = sf.h;
    Vector u = kkt.solve(rhs);
    it.x = u.head(n);
    it.s = -u.tail(m);
    rhs.setZero();
    rhs.head(n) = -sf.c;
    u = kkt.solve(rhs);
    it.y = u.segment(n, p);
    it.z = u.tail(m);
    const double ap = max_violation(segs, it.s);
    if (ap >= -1e-8 * std::max(1.0, it.s.norm())) it.s += (1.0 + std::max(ap, 0.0)) * e;
    const double ad = max_violation(segs, it.z);
    if (ad >= -1e-8 * std::max(1.0, it.z.norm())) it.z += (1.0 + std::max(ad, 0.0)) * e;
  }

  const double resx0 = std::max(1.0, sf.c.norm());
  const double resy0 = std::max(1.0, sf.b.norm());
  const double resz0 = std::max(1.0, sf.h.norm());

  double pres = kInf, dres = kInf, gap = kInf, pcost = 0, dcost = 0;
  auto near_optimal = [&](double factor) {
    return pres <= factor * tol && dres <= factor * tol &&
           (gap <= factor * tol * (1.0 + std::abs(pcost)) ||
            std::abs(pcost - dcost) <= factor * tol * (1.0 + std::abs(pcost)));
  };

  // Fallbacks when the iteration breaks down near the end.
  struct Snapshot {
    Iterate it;
    double pres = kInf, dres = kInf, gap = kInf, pcost = 0, dcost = 0, merit = kInf;
  };
  Snapshot best;
  Snapshot best_infeasible;
  Snapshot best_unbounded;

  for (int iter = 0;; ++iter) {
    res.stats.iterations = iter;
    // Residuals of the embedding.
    const Vector rx = sf.A.transpose() * it.y + sf.G.transpose() * it.z + sf.c * it.tau;
    const Vector ry = sf.b * it.tau - sf.A * it.x;
    const Vector rz = sf.h * it.tau - sf.G * it.x - it.s;
    const double cx = sf.c.dot(it.x);
    const double by = sf.b.dot(it.y);
    const double hz = sf.h.dot(it.z);
    const double rt = -cx - by - hz - it.kappa;
    const double sz = it.s.dot(it.z);
    const double mu = (sz + it.tau * it.kappa) / static_cast<double>(nu + 1);

    pcost = cx / it.tau;
    dcost = -(by + hz) / it.tau;
    gap = sz / (it.tau * it.tau);
    pres = std::max(ry.norm() / resy0, rz.norm() / resz0) / it.tau;
    dres = rx.norm() / resx0 / it.tau;
    res.stats.primal_residual = pres;
    res.stats.dual_residual = dres;
    res.stats.gap = gap;

    if (near_optimal(1.0)) {
      res.status = SolveStatus::Optimal;
      break;
    }
    const double merit = std::max({pres, dres, std::min(gap, std::abs(pcost - dcost)) / (1.0 + std::abs(pcost))});
    if (merit < best.merit) best = {it, pres, dres, gap, pcost, dcost, merit};
    if (by + hz < 0) {
      const double pinf = (sf.A.transpose() * it.y + sf.G.transpose() * it.z).norm() / resx0 / (-(by + hz));
      if (pinf <= tol) {
        res.status = SolveStatus::Infeasible;
        break;
      }
      if (pinf < best_infeasible.merit) best_infeasible = {it, 0, 0, 0, 0, 0, pinf};
    }
    if (cx < 0) {
      const double dinf =
          std::max((sf.A * it.x).norm() / resy0, (sf.G * it.x + it.s).norm() / resz0) / (-cx);
      if (dinf <= tol) {
        res.status = SolveStatus::Unbounded;
        break;
      }
      if (dinf < best_unbounded.merit) best_unbounded = {it, 0, 0, 0, 0, 0, dinf};
    }
    const double elapsed = std::chrono::duration<double>(clock::now() - start).count();
    if (iter >= cfg.max_iterations || elapsed > cfg.time_limit) {
      res.message = iter >= cfg.max_iterations ? "iteration limit" : "time limit";
      break;
    }

    if (!compute_scaling(segs, it.s, it.z, sc)) {
      res.message = "iterate left the cone";
      break;
    }
    if (!kkt.factor(sc)) {
      res.message = "KKT factorization failed";
      break;
    }

    Vector rhs1(kkt.size());
    rhs1 << -sf.c, sf.b, sf.h;
    const Vector u1 = kkt.solve(rhs1);
    const Vector x1 = u1.head(n), y1 = u1.segment(n, p), z1 = u1.tail(m);
    double denom = it.kappa / it.tau - sf.c.dot(x1) - sf.b.dot(y1) - sf.h.dot(z1);
    if (!(denom > 0)) denom = it.kappa / it.tau + apply_W(segs, sc, z1, false).squaredNorm();

    struct Direction {
      Vector dx, dy, dz, ds, ds_scaled, dz_scaled;
      double dtau = 0, dkappa = 0;
    };
    auto direction = [&](double eta, const Vector& d_s, double d_kappa) {
      Direction d;
      const Vector lsd = jordan_solve(segs, sc, d_s);
      Vector rhs2(kkt.size());
      rhs2 << -eta * rx, eta * ry, eta * rz - apply_W(segs, sc, lsd, true);
      const Vector u2 = kkt.solve(rhs2);
      d.dtau = (-eta * rt + d_kappa / it.tau + sf.c.dot(u2.head(n)) + sf.b.dot(u2.segment(n, p)) +
                sf.h.dot(u2.tail(m))) /
               denom;
      d.dx = u2.head(n) + d.dtau * x1;
      d.dy = u2.segment(n, p) + d.dtau * y1;
      d.dz = u2.tail(m) + d.dtau * z1;
      d.dz_scaled = apply_W(segs, sc, d.dz, false);
      // h dtau - G dx - ds = -eta rz, taken literally to avoid cancellation in W.
      d.ds = eta * rz + d.dtau * sf.h - sf.G * d.dx;
      d.ds_scaled = kkt.scale(d.ds);
      d.dkappa = (d_kappa - it.kappa * d.dtau) / it.tau;
      return d;
    };
    auto max_step = [&](const Direction& d) {
      double a = std::min(scaled_max_step(segs, sc, d.ds_scaled), scaled_max_step(segs, sc, d.dz_scaled));
      if (d.dtau < 0) a = std::min(a, -it.tau / d.dtau);
      if (d.dkappa < 0) a = std::min(a, -it.kappa / d.dkappa);
      return a;
    };

    const Vector ll = jordan_product(segs, sc.lambda, sc.lambda);
    const Direction aff = direction(1.0, -ll, -it.tau * it.kappa);
    const double a_aff = std::min(1.0, max_step(aff));
    const double sigma = std::clamp(std::pow(1.0 - a_aff, 3), 0.0, 1.0);
    const Vector ds = -ll + sigma * mu * e - jordan_product(segs, aff.ds_scaled, aff.dz_scaled);
    const double dk = -it.tau * it.kappa + sigma * mu - aff.dtau * aff.dkappa;
    const Direction cmb = direction(1.0 - sigma, ds, dk);
    const double alpha = std::min(1.0, 0.99 * max_step(cmb));
    if (!(alpha > 1e-12)) {
      res.message = "step length vanished";
      break;
    }
    it.x += alpha * cmb.dx;
    it.y += alpha * cmb.dy;
    it.z += alpha * cmb.dz;
    it.s += alpha * cmb.ds;
    it.tau += alpha * cmb.dtau;
    it.kappa += alpha * cmb.dkappa;
    if (cfg.verbosity > 1) {
      std::fprintf(stderr, "%3d pcost=% .8e dcost=% .8e pres=%.2e dres=%.2e gap=%.2e step=%.3f\n", iter,
                   pcost, dcost, pres, dres, gap, alpha);
    }
  }
  if (res.status == SolveStatus::NumericalFailure) {
    const std::string why = res.message;
    if (best.merit <= 10.0 * tol && !near_optimal(10.0)) {
      it = best.it;
      pres = best.pres;
      dres = best.dres;
      gap = best.gap;
      pcost = best.pcost;
      dcost = best.dcost;
    }
    if (near_optimal(10.0)) {
      res.status = SolveStatus::Optimal;
      res.message = "reduced accuracy: " + why;
    } else if (best_infeasible.merit <= 10.0 * tol) {
      it = best_infeasible.it;
      res.status = SolveStatus::Infeasible;
      res.message = "reduced accuracy: " + why;
    } else if (best_unbounded.merit <= 10.0 * tol) {
      it = best_unbounded.it;
      res.status = SolveStatus::Unbounded;
      res.message = "reduced accuracy: " + why;
    }
  }
  res.stats.wall_time = std::chrono::duration<double>(clock::now() - start).count();
  return res;
}

}  // namespace detail

/// Solves a validated program. Variable bounds become orthant rows, a convex
/// quadratic objective is moved into an epigraph cone, integrality flags are
/// ignored (continuous relaxation).
inline Solution solve(const ConicProgram& prog, const SolverConfig& cfg = {}) {
  if (!(cfg.tolerance > 0)) throw Error(ErrorCode::InvalidSpec, "solver tolerance must be positive");
  const auto defects = validate(prog);
  if (!defects.empty()) {
    throw Error(ErrorCode::InvalidSpec, "program fails validation: " + defects.front().rule);
  }
  const detail::StandardForm sf = detail::lower_program(prog, cfg);
  detail::IpmResult r = detail::run_ipm(sf, cfg);

  Solution sol;
  sol.status = r.status;
  sol.stats = r.stats;
  sol.message = r.message;
  const auto& it = r.it;
  const auto n0 = static_cast<Eigen::Index>(sf.original_vars);
  const double tau = std::max(it.tau, 1e-300);
  if (r.status == SolveStatus::Optimal || r.status == SolveStatus::NumericalFailure) {
    const Vector x = it.x.head(n0) / tau;
    sol.primal = to_std(x);
    sol.objective = sf.c.dot(it.x) / tau + sf.offset;
    const Vector y = it.y / tau;
    const Vector z = it.z / tau;
    sol.duals.resize(prog.blocks.size());
    for (std::size_t bi = 0; bi < prog.blocks.size(); ++bi) {
      const auto& rec = sf.recovery[bi];
      auto& d = sol.duals[bi];
      d.assign(rec.rows, 0.0);
      const auto st = static_cast<Eigen::Index>(rec.start);
      switch (rec.map) {
        case detail::BlockMap::Empty: break;
        case detail::BlockMap::Equality:
          // Dual of  A_blk x + b_blk = 0  in the convention  c + A'y + G'z = 0.
          for (std::size_t r = 0; r < rec.rows; ++r) d[r] = -y(st + static_cast<Eigen::Index>(r));
          break;
        case detail::BlockMap::Direct:
          for (std::size_t r = 0; r < rec.rows; ++r) d[r] = z(st + static_cast<Eigen::Index>(r));
          break;
        case detail::BlockMap::Rotated:
          d[0] = 0.5 * (z(st) + z(st + 1));
          d[1] = 0.5 * (z(st) - z(st + 1));
          for (std::size_t r = 2; r < rec.rows; ++r) d[r] = z(st + static_cast<Eigen::Index>(r));
          break;
        case detail::BlockMap::Psd2:
          d[0] = 0.5 * (z(st) + z(st + 1));
          d[2] = 0.5 * (z(st) - z(st + 1));
          d[1] = z(st + 2) / kSqrt2;
          break;
      }
    }
  } else if (r.status == SolveStatus::Infeasible) {
    const double scale = -(sf.b.dot(it.y) + sf.h.dot(it.z));
    Vector cert(it.y.size() + it.z.size());
    cert << it.y, it.z;
    sol.certificate = to_std(cert / scale);
  } else if (r.status == SolveStatus::Unbounded) {
    const double scale = -sf.c.dot(it.x);
    sol.certificate = to_std(it.x.head(n0) / scale);
  }
  return sol;
}

}  // namespace rankone
