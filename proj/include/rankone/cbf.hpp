#pragma once

// Conic Benchmark Format (version 2) writer and reader.
//
// Mapping from the IR:
//   Zero -> L=,  Nonnegative -> L+,  SecondOrder -> Q,
//   RotatedSecondOrder -> QR (first row halved: CBF uses 2 u v >= ||w||^2),
//   PsdTriangle -> PSDCON with HCOORD/DCOORD entries (unscaled lower triangle).
// All variables are declared free in a single F domain. The program name
// and metadata travel in leading comment lines.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "rankone/conic.hpp"
#include "rankone/error.hpp"
#include "rankone/io.hpp"
#include "rankone/numeric.hpp"

namespace rankone {

namespace detail {

inline const char* cbf_cone(ConeKind c) {
  switch (c) {
    case ConeKind::Zero: return "L=";
    case ConeKind::Nonnegative: return "L+";
    case ConeKind::SecondOrder: return "Q";
    case ConeKind::RotatedSecondOrder: return "QR";
    case ConeKind::PsdTriangle: return "PSD";
  }
  return "?";
}

inline bool plain_token(const std::string& s) {
  return std::none_of(s.begin(), s.end(), [](char c) { return c == '\n' || c == '\r'; });
}

}  // namespace detail

/// Blocks in export order: non-PSD blocks first, PSD blocks last, each group
/// in original order. Import returns blocks in this order.
inline std::vector<std::size_t> cbf_block_order(const ConicProgram& p) {
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < p.blocks.size(); ++i) {
    if (p.blocks[i].cone != ConeKind::PsdTriangle) order.push_back(i);
  }
  for (std::size_t i = 0; i < p.blocks.size(); ++i) {
    if (p.blocks[i].cone == ConeKind::PsdTriangle) order.push_back(i);
  }
  return order;
}

/// Moves finite variable bounds into one nonnegative block labeled "bounds"
/// (x - l >= 0, then u - x >= 0, in variable order).
inline ConicProgram bounds_as_rows(ConicProgram p) {
  ConstraintBlock blk;
  blk.label = "bounds";
  for (std::size_t j = 0; j < p.num_vars; ++j) {
    if (std::isfinite(p.lower[j])) {
      blk.coeffs.push_back({blk.rows, j, 1.0});
      blk.offset.push_back(-p.lower[j]);
      ++blk.rows;
    }
    if (std::isfinite(p.upper[j])) {
      blk.coeffs.push_back({blk.rows, j, -1.0});
      blk.offset.push_back(p.upper[j]);
      ++blk.rows;
    }
    p.lower[j] = -kInf;
    p.upper[j] = kInf;
  }
  if (blk.rows > 0) p.blocks.push_back(std::move(blk));
  return p;
}

inline std::string export_cbf(const ConicProgram& p) {
  const auto defects = validate(p);
  if (!defects.empty()) throw Error(ErrorCode::InvalidSpec, "cannot export invalid program: " + defects.front().rule);
  if (p.has_integers() || p.has_quadratic() || p.has_finite_bounds()) {
    throw Error(ErrorCode::NotContinuous, "CBF export takes continuous programs without bounds or quadratic terms");
  }
  std::ostringstream out;
  if (!p.name.empty() && detail::plain_token(p.name)) out << "# name " << p.name << "\n";
  for (const auto& [k, v] : p.metadata) {
    if (detail::plain_token(k) && detail::plain_token(v) && k.find('=') == std::string::npos) {
      out << "# meta " << k << "=" << v << "\n";
    }
  }
  out << "VER\n2\n\n";
  out << "OBJSENSE\nMIN\n\n";
  out << "VAR\n" << p.num_vars << " " << (p.num_vars > 0 ? 1 : 0) << "\n";
  if (p.num_vars > 0) out << "F " << p.num_vars << "\n";
  out << "\n";

  std::vector<std::size_t> lin, psd;
  for (std::size_t i = 0; i < p.blocks.size(); ++i) {
    (p.blocks[i].cone == ConeKind::PsdTriangle ? psd : lin).push_back(i);
  }
  std::size_t m = 0;
  for (auto i : lin) m += p.blocks[i].rows;
  if (!psd.empty()) {
    out << "PSDCON\n" << psd.size() << "\n";
    for (auto i : psd) out << p.blocks[i].psd_order() << "\n";
    out << "\n";
  }
  if (!lin.empty()) {
    out << "CON\n" << m << " " << lin.size() << "\n";
    for (auto i : lin) out << detail::cbf_cone(p.blocks[i].cone) << " " << p.blocks[i].rows << "\n";
    out << "\n";
  }

  std::vector<std::pair<std::size_t, double>> obj;
  for (std::size_t j = 0; j < p.num_vars; ++j) {
    if (p.objective[j] != 0.0) obj.emplace_back(j, p.objective[j]);
  }
  if (!obj.empty()) {
    out << "OBJACOORD\n" << obj.size() << "\n";
    for (const auto& [j, v] : obj) out << j << " " << format_double(v) << "\n";
    out << "\n";
  }
  if (p.objective_offset != 0.0) out << "OBJBCOORD\n" << format_double(p.objective_offset) << "\n\n";

  auto row_scale = [](const ConstraintBlock& b, std::size_t r) {
    return b.cone == ConeKind::RotatedSecondOrder && r == 0 ? 0.5 : 1.0;
  };
  std::ostringstream acoord, bcoord;
  std::size_t na = 0, nb = 0, base = 0;
  for (auto i : lin) {
    const auto& b = p.blocks[i];
    for (const auto& c : b.coeffs) {
      acoord << base + c.row << " " << c.col << " " << format_double(c.value * row_scale(b, c.row)) << "\n";
      ++na;
    }
    for (std::size_t r = 0; r < b.rows; ++r) {
      if (b.offset[r] != 0.0) {
        bcoord << base + r << " " << format_double(b.offset[r] * row_scale(b, r)) << "\n";
        ++nb;
      }
    }
    base += b.rows;
  }
  if (na > 0) out << "ACOORD\n" << na << "\n" << acoord.str() << "\n";
  if (nb > 0) out << "BCOORD\n" << nb << "\n" << bcoord.str() << "\n";

  // PSD entries: svec row r of order k maps to (row, col), value / sqrt2 off the diagonal.
  std::ostringstream hcoord, dcoord;
  std::size_t nh = 0, nd = 0;
  for (std::size_t q = 0; q < psd.size(); ++q) {
    const auto& b = p.blocks[psd[q]];
    const std::size_t k = b.psd_order();
    std::vector<std::pair<std::size_t, std::size_t>> pos(b.rows);
    for (std::size_t j = 0; j < k; ++j) {
      for (std::size_t i = j; i < k; ++i) pos[svec_index(k, i, j)] = {i, j};
    }
    // HCOORD entries sorted by (variable, row, col) as many readers expect.
    std::vector<std::tuple<std::size_t, std::size_t, std::size_t, double>> h;
    for (const auto& c : b.coeffs) {
      const auto [i, j] = pos[c.row];
      h.emplace_back(c.col, i, j, i == j ? c.value : c.value / kSqrt2);
    }
    std::sort(h.begin(), h.end(), [](const auto& a, const auto& bb) {
      return std::tie(std::get<0>(a), std::get<1>(a), std::get<2>(a)) <
             std::tie(std::get<0>(bb), std::get<1>(bb), std::get<2>(bb));
    });
    for (const auto& [var, i, j, v] : h) {
      hcoord << q << " " << var << " " << i << " " << j << " " << format_double(v) << "\n";
      ++nh;
    }
    for (std::size_t r = 0; r < b.rows; ++r) {
      if (b.offset[r] == 0.0) continue;
      const auto [i, j] = pos[r];
      dcoord << q << " " << i << " " << j << " " << format_double(i == j ? b.offset[r] : b.offset[r] / kSqrt2) << "\n";
      ++nd;
    }
  }
  if (nh > 0) out << "HCOORD\n" << nh << "\n" << hcoord.str() << "\n";
  if (nd > 0) out << "DCOORD\n" << nd << "\n" << dcoord.str() << "\n";
  return out.str();
}

namespace detail {

class LineReader {
 public:
  explicit LineReader(const std::string& text) : in_(text) {}

  /// Next non-empty, non-comment line; false at end of input.
  bool next(std::string& line) {
    while (std::getline(in_, line)) {
      ++lineno_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const auto first = line.find_first_not_of(" \t");
      if (first == std::string::npos) continue;
      if (line[first] == '#') {
        comments_.push_back(line.substr(first + 1));
        continue;
      }
      line = line.substr(first);
      while (!line.empty() && (line.back() == ' ' || line.back() == '\t')) line.pop_back();
      return true;
    }
    return false;
  }

  std::string require(const char* what) {
    std::string line;
    if (!next(line)) fail(std::string("unexpected end of input, expected ") + what);
    return line;
  }

  [[noreturn]] void fail(const std::string& msg) const { throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno_) + ": " + msg, lineno_); }

  std::size_t line() const { return lineno_; }
  const std::vector<std::string>& comments() const { return comments_; }

 private:
  std::istringstream in_;
  std::size_t lineno_ = 0;
  std::vector<std::string> comments_;
};

inline std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

inline std::size_t parse_index(LineReader& r, const std::string& tok) {
  std::size_t v = 0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) r.fail("expected a non-negative integer, got '" + tok + "'");
  return v;
}

inline double parse_value(LineReader& r, const std::string& tok) {
  double v = 0.0;
  if (!parse_double(tok, v)) r.fail("expected a number, got '" + tok + "'");
  return v;
}

inline std::vector<std::string> fields(LineReader& r, std::size_t count, const char* what) {
  auto f = split_ws(r.require(what));
  if (f.size() != count) {
    r.fail(std::string("expected ") + std::to_string(count) + " fields in " + what + ", got " + std::to_string(f.size()));
  }
  return f;
}

}  // namespace detail

inline ConicProgram import_cbf(const std::string& text) {
  detail::LineReader r(text);
  std::string line;
  if (!r.next(line) || line != "VER") r.fail("expected VER header");
  {
    auto f = detail::fields(r, 1, "VER");
    const auto ver = detail::parse_index(r, f[0]);
    if (ver < 1 || ver > 3) r.fail("unsupported CBF version " + f[0]);
  }

  ConicProgram p;
  bool have_var = false;
  std::vector<std::pair<ConeKind, std::size_t>> con_cones;
  std::vector<std::size_t> psd_orders;
  std::size_t m = 0;
  struct Entry {
    std::size_t a, b, c;
    double v;
  };
  std::vector<Entry> acoord, hcoord, dcoord;
  std::vector<std::pair<std::size_t, double>> bcoord;

  auto count_line = [&](const char* what) { return detail::parse_index(r, detail::fields(r, 1, what)[0]); };

  while (r.next(line)) {
    if (line == "OBJSENSE") {
      const auto sense = r.require("OBJSENSE value");
      if (sense != "MIN") r.fail("only MIN objective sense is supported");
    } else if (line == "VAR") {
      auto f = detail::fields(r, 2, "VAR header");
      const std::size_t n = detail::parse_index(r, f[0]);
      const std::size_t k = detail::parse_index(r, f[1]);
      std::size_t total = 0;
      for (std::size_t i = 0; i < k; ++i) {
        auto c = detail::fields(r, 2, "VAR cone");
        if (c[0] != "F") r.fail("only free variable domains are supported, got " + c[0]);
        total += detail::parse_index(r, c[1]);
      }
      if (total != n) r.fail("VAR cone sizes do not add up to " + f[0]);
      p.num_vars = n;
      p.objective.assign(n, 0.0);
      p.lower.assign(n, -kInf);
      p.upper.assign(n, kInf);
      p.integer.assign(n, 0);
      have_var = true;
    } else if (line == "CON") {
      auto f = detail::fields(r, 2, "CON header");
      m = detail::parse_index(r, f[0]);
      const std::size_t k = detail::parse_index(r, f[1]);
      std::size_t total = 0;
      for (std::size_t i = 0; i < k; ++i) {
        auto c = detail::fields(r, 2, "CON cone");
        const std::size_t dim = detail::parse_index(r, c[1]);
        ConeKind kind;
        if (c[0] == "L=") {
          kind = ConeKind::Zero;
        } else if (c[0] == "L+") {
          kind = ConeKind::Nonnegative;
        } else if (c[0] == "Q") {
          kind = ConeKind::SecondOrder;
        } else if (c[0] == "QR") {
          kind = ConeKind::RotatedSecondOrder;
        } else {
          throw Error(ErrorCode::UnsupportedCone, "line " + std::to_string(r.line()) + ": cone " + c[0], r.line());
        }
        con_cones.emplace_back(kind, dim);
        total += dim;
      }
      if (total != m) r.fail("CON cone sizes do not add up to " + f[0]);
    } else if (line == "PSDCON") {
      const std::size_t k = count_line("PSDCON count");
      for (std::size_t i = 0; i < k; ++i) psd_orders.push_back(count_line("PSDCON order"));
    } else if (line == "OBJACOORD") {
      if (!have_var) r.fail("OBJACOORD before VAR");
      const std::size_t nnz = count_line("OBJACOORD count");
      for (std::size_t i = 0; i < nnz; ++i) {
        auto f = detail::fields(r, 2, "OBJACOORD entry");
        const std::size_t j = detail::parse_index(r, f[0]);
        if (j >= p.num_vars) r.fail("variable index out of range");
        p.objective[j] += detail::parse_value(r, f[1]);
      }
    } else if (line == "OBJBCOORD") {
      p.objective_offset = detail::parse_value(r, detail::fields(r, 1, "OBJBCOORD")[0]);
    } else if (line == "ACOORD") {
      const std::size_t nnz = count_line("ACOORD count");
      for (std::size_t i = 0; i < nnz; ++i) {
        auto f = detail::fields(r, 3, "ACOORD entry");
        const std::size_t row = detail::parse_index(r, f[0]);
        const std::size_t col = detail::parse_index(r, f[1]);
        if (row >= m) r.fail("row index out of range");
        if (col >= p.num_vars) r.fail("variable index out of range");
        acoord.push_back({row, col, 0, detail::parse_value(r, f[2])});
      }
    } else if (line == "BCOORD") {
      const std::size_t nnz = count_line("BCOORD count");
      for (std::size_t i = 0; i < nnz; ++i) {
        auto f = detail::fields(r, 2, "BCOORD entry");
        const std::size_t row = detail::parse_index(r, f[0]);
        if (row >= m) r.fail("row index out of range");
        bcoord.emplace_back(row, detail::parse_value(r, f[1]));
      }
    } else if (line == "HCOORD") {
      const std::size_t nnz = count_line("HCOORD count");
      for (std::size_t i = 0; i < nnz; ++i) {
        auto f = detail::fields(r, 5, "HCOORD entry");
        const std::size_t q = detail::parse_index(r, f[0]);
        const std::size_t var = detail::parse_index(r, f[1]);
        const std::size_t a = detail::parse_index(r, f[2]);
        const std::size_t b = detail::parse_index(r, f[3]);
        if (q >= psd_orders.size()) r.fail("PSD constraint index out of range");
        if (var >= p.num_vars) r.fail("variable index out of range");
        if (a >= psd_orders[q] || b >= psd_orders[q]) r.fail("PSD entry out of range");
        hcoord.push_back({q, var, svec_index(psd_orders[q], a, b), detail::parse_value(r, f[4]) * (a == b ? 1.0 : kSqrt2)});
      }
    } else if (line == "DCOORD") {
      const std::size_t nnz = count_line("DCOORD count");
      for (std::size_t i = 0; i < nnz; ++i) {
        auto f = detail::fields(r, 4, "DCOORD entry");
        const std::size_t q = detail::parse_index(r, f[0]);
        const std::size_t a = detail::parse_index(r, f[1]);
        const std::size_t b = detail::parse_index(r, f[2]);
        if (q >= psd_orders.size()) r.fail("PSD constraint index out of range");
        if (a >= psd_orders[q] || b >= psd_orders[q]) r.fail("PSD entry out of range");
        dcoord.push_back({q, 0, svec_index(psd_orders[q], a, b), detail::parse_value(r, f[3]) * (a == b ? 1.0 : kSqrt2)});
      }
    } else {
      r.fail("unknown section '" + line + "'");
    }
  }

  // Linear blocks.
  std::vector<std::size_t> block_of(m), row_in(m);
  {
    std::size_t row = 0;
    for (std::size_t k = 0; k < con_cones.size(); ++k) {
      ConstraintBlock b;
      b.cone = con_cones[k].first;
      b.rows = con_cones[k].second;
      b.offset.assign(b.rows, 0.0);
      for (std::size_t r2 = 0; r2 < b.rows; ++r2, ++row) {
        block_of[row] = k;
        row_in[row] = r2;
      }
      p.blocks.push_back(std::move(b));
    }
  }
  auto unscale = [&](const ConstraintBlock& b, std::size_t r2) {
    return b.cone == ConeKind::RotatedSecondOrder && r2 == 0 ? 2.0 : 1.0;
  };
  for (const auto& e : acoord) {
    auto& b = p.blocks[block_of[e.a]];
    b.coeffs.push_back({row_in[e.a], e.b, e.v * unscale(b, row_in[e.a])});
  }
  for (const auto& [row, v] : bcoord) {
    auto& b = p.blocks[block_of[row]];
    b.offset[row_in[row]] += v * unscale(b, row_in[row]);
  }
  const std::size_t first_psd = p.blocks.size();
  for (std::size_t k : psd_orders) {
    ConstraintBlock b;
    b.cone = ConeKind::PsdTriangle;
    b.rows = svec_size(k);
    b.offset.assign(b.rows, 0.0);
    p.blocks.push_back(std::move(b));
  }
  for (const auto& e : hcoord) p.blocks[first_psd + e.a].coeffs.push_back({e.c, e.b, e.v});
  for (const auto& e : dcoord) p.blocks[first_psd + e.a].offset[e.c] += e.v;
  for (auto& b : p.blocks) ProgramBuilder::canonicalize(b);

  for (const auto& c : r.comments()) {
    if (c.rfind(" name ", 0) == 0) {
      p.name = c.substr(6);
    } else if (c.rfind(" meta ", 0) == 0) {
      const auto body = c.substr(6);
      const auto eq = body.find('=');
      if (eq != std::string::npos) p.metadata[body.substr(0, eq)] = body.substr(eq + 1);
    }
  }
  if (!have_var) {
    p.objective.clear();
    p.lower.clear();
    p.upper.clear();
    p.integer.clear();
  }
  return p;
}

/// Structural equality of programs, blocks compared in CBF order. `tol`
/// bounds the coefficient difference (PSD off-diagonals pass through a
/// division and multiplication by sqrt 2).
inline bool structurally_equal(const ConicProgram& a, const ConicProgram& b, double tol = 0.0) {
  auto close = [&](double x, double y) { return std::abs(x - y) <= tol * std::max(1.0, std::abs(x)); };
  if (a.num_vars != b.num_vars || a.blocks.size() != b.blocks.size()) return false;
  if (!close(a.objective_offset, b.objective_offset)) return false;
  for (std::size_t j = 0; j < a.num_vars; ++j) {
    if (!close(a.objective[j], b.objective[j])) return false;
  }
  const auto oa = cbf_block_order(a);
  const auto ob = cbf_block_order(b);
  for (std::size_t k = 0; k < oa.size(); ++k) {
    const auto& x = a.blocks[oa[k]];
    const auto& y = b.blocks[ob[k]];
    if (x.cone != y.cone || x.rows != y.rows || x.coeffs.size() != y.coeffs.size()) return false;
    for (std::size_t i = 0; i < x.coeffs.size(); ++i) {
      if (x.coeffs[i].row != y.coeffs[i].row || x.coeffs[i].col != y.coeffs[i].col) return false;
      if (!close(x.coeffs[i].value, y.coeffs[i].value)) return false;
    }
    for (std::size_t r = 0; r < x.rows; ++r) {
      if (!close(x.offset[r], y.offset[r])) return false;
    }
  }
  return true;
}

}  // namespace rankone
