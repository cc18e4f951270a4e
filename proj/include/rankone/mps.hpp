#pragma once

// Free-format MPS writer and reader for mixed-integer quadratic programs
// with linear rows. The objective is  c'x + 0.5 x'Qx + offset; QMATRIX
// lists both triangles of Q. The objective constant is written as the
// negated right-hand side of the objective row.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "rankone/cbf.hpp"
#include "rankone/conic.hpp"
#include "rankone/error.hpp"
#include "rankone/numeric.hpp"

namespace rankone {

namespace detail {

inline std::string mps_name(const std::string& raw, const std::string& fallback) {
  if (raw.empty()) return fallback;
  std::string s = raw;
  for (char& c : s) {
    if (c == ' ' || c == '\t' || c == '$' || c == '*') c = '_';
  }
  return s;
}

}  // namespace detail

/// Writes programs made of linear blocks (Zero / Nonnegative) with an optional
/// convex quadratic objective, bounds and integrality flags.
inline std::string export_mps(const ConicProgram& p) {
  const auto defects = validate(p);
  if (!defects.empty()) throw Error(ErrorCode::InvalidSpec, "cannot export invalid program: " + defects.front().rule);
  for (std::size_t i = 0; i < p.blocks.size(); ++i) {
    const auto c = p.blocks[i].cone;
    if (c != ConeKind::Zero && c != ConeKind::Nonnegative) {
      throw Error(ErrorCode::NotMiqpShaped,
                  "block " + std::to_string(i) + " has cone " + to_string(c) + "; MPS export takes linear rows only");
    }
  }

  // Row list: (type, block, row-in-block).
  struct Row {
    char type;
    std::size_t block;
    std::size_t row;
  };
  std::vector<Row> rows;
  for (std::size_t i = 0; i < p.blocks.size(); ++i) {
    for (std::size_t r = 0; r < p.blocks[i].rows; ++r) {
      rows.push_back({p.blocks[i].cone == ConeKind::Zero ? 'E' : 'G', i, r});
    }
  }
  std::vector<std::string> row_names(rows.size());
  std::vector<std::vector<std::size_t>> block_row_index(p.blocks.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    row_names[k] = "c" + std::to_string(k);
    block_row_index[rows[k].block].push_back(k);
  }
  std::vector<std::string> col_names(p.num_vars);
  for (std::size_t j = 0; j < p.num_vars; ++j) col_names[j] = detail::mps_name(p.var_name(j), "x" + std::to_string(j));

  // Column-major entries.
  std::vector<std::vector<std::pair<std::size_t, double>>> cols(p.num_vars);
  for (std::size_t i = 0; i < p.blocks.size(); ++i) {
    for (const auto& c : p.blocks[i].coeffs) cols[c.col].emplace_back(block_row_index[i][c.row], c.value);
  }
  for (auto& c : cols) std::sort(c.begin(), c.end());

  std::ostringstream out;
  out << "NAME " << detail::mps_name(p.name, "rankone") << "\n";
  out << "ROWS\n";
  out << " N obj\n";
  for (std::size_t k = 0; k < rows.size(); ++k) out << " " << rows[k].type << " " << row_names[k] << "\n";

  out << "COLUMNS\n";
  bool in_int = false;
  std::size_t marker = 0;
  for (std::size_t j = 0; j < p.num_vars; ++j) {
    const bool is_int = p.integer[j] != 0;
    if (is_int && !in_int) {
      out << " MARKER" << marker << " 'MARKER' 'INTORG'\n";
      in_int = true;
    } else if (!is_int && in_int) {
      out << " MARKER" << marker++ << " 'MARKER' 'INTEND'\n";
      in_int = false;
    }
    bool any = false;
    if (p.objective[j] != 0.0) {
      out << " " << col_names[j] << " obj " << format_double(p.objective[j]) << "\n";
      any = true;
    }
    for (const auto& [r, v] : cols[j]) {
      out << " " << col_names[j] << " " << row_names[r] << " " << format_double(v) << "\n";
      any = true;
    }
    // Keep every column declared so the reader recovers num_vars.
    if (!any) out << " " << col_names[j] << " obj 0\n";
  }
  if (in_int) out << " MARKER" << marker << " 'MARKER' 'INTEND'\n";

  out << "RHS\n";
  if (p.objective_offset != 0.0) out << " rhs obj " << format_double(-p.objective_offset) << "\n";
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const double b = -p.blocks[rows[k].block].offset[rows[k].row];
    if (b != 0.0) out << " rhs " << row_names[k] << " " << format_double(b) << "\n";
  }

  out << "BOUNDS\n";
  for (std::size_t j = 0; j < p.num_vars; ++j) {
    const double lo = p.lower[j];
    const double hi = p.upper[j];
    const auto& name = col_names[j];
    if (p.integer[j] && lo == 0.0 && hi == 1.0) {
      out << " BV bnd " << name << "\n";
      continue;
    }
    if (!std::isfinite(lo) && !std::isfinite(hi)) {
      out << " FR bnd " << name << "\n";
      continue;
    }
    if (lo == hi) {
      out << " FX bnd " << name << " " << format_double(lo) << "\n";
      continue;
    }
    if (std::isfinite(lo)) {
      out << " LO bnd " << name << " " << format_double(lo) << "\n";
    } else {
      out << " MI bnd " << name << "\n";
    }
    if (std::isfinite(hi)) out << " UP bnd " << name << " " << format_double(hi) << "\n";
  }

  if (p.has_quadratic()) {
    out << "QMATRIX\n";
    std::vector<QuadraticEntry> full;
    for (const auto& q : p.quadratic) {
      full.push_back(q);
      if (q.row != q.col) full.push_back({q.col, q.row, q.value});
    }
    std::sort(full.begin(), full.end(), [](const QuadraticEntry& a, const QuadraticEntry& b) {
      return a.col != b.col ? a.col < b.col : a.row < b.row;
    });
    for (const auto& q : full) {
      out << " " << col_names[q.col] << " " << col_names[q.row] << " " << format_double(q.value) << "\n";
    }
  }
  out << "ENDATA\n";
  return out.str();
}

/// Reads the subset of free MPS produced by export_mps (plus L rows). Each
/// row becomes its own single-row block.
inline ConicProgram import_mps(const std::string& text) {
  detail::LineReader r(text);
  ConicProgram p;
  std::string line;
  std::string section;
  std::string obj_row;
  std::map<std::string, std::size_t> row_index;
  std::vector<char> row_type;
  std::map<std::string, std::size_t> col_index;
  bool in_int = false;
  bool ended = false;

  auto col = [&](const std::string& name, bool create) -> std::size_t {
    auto it = col_index.find(name);
    if (it != col_index.end()) return it->second;
    if (!create) r.fail("unknown column '" + name + "'");
    const std::size_t j = p.num_vars++;
    col_index[name] = j;
    p.var_names.push_back(name);
    p.objective.push_back(0.0);
    p.lower.push_back(0.0);
    p.upper.push_back(kInf);
    p.integer.push_back(in_int ? 1 : 0);
    return j;
  };
  auto row_entry = [&](std::size_t j, const std::string& rname, double v) {
    if (rname == obj_row) {
      p.objective[j] += v;
      return;
    }
    auto it = row_index.find(rname);
    if (it == row_index.end()) r.fail("unknown row '" + rname + "'");
    auto& b = p.blocks[it->second];
    b.coeffs.push_back({0, j, row_type[it->second] == 'L' ? -v : v});
  };

  while (r.next(line)) {
    auto f = detail::split_ws(line);
    const std::string& key = f[0];
    if (key == "NAME") {
      section = "NAME";
      if (f.size() > 1) p.name = f[1];
      continue;
    }
    if (key == "ROWS" || key == "COLUMNS" || key == "RHS" || key == "BOUNDS" || key == "QMATRIX" ||
        key == "RANGES") {
      if (f.size() == 1) {
        section = key;
        if (section == "RANGES") r.fail("RANGES section is not supported");
        continue;
      }
    }
    if (key == "ENDATA") {
      ended = true;
      break;
    }
    if (section == "ROWS") {
      if (f.size() != 2) r.fail("ROWS entry needs 2 fields");
      if (f[0] == "N") {
        if (obj_row.empty()) obj_row = f[1];
        continue;
      }
      if (f[0] != "E" && f[0] != "G" && f[0] != "L") r.fail("unknown row type '" + f[0] + "'");
      row_index[f[1]] = p.blocks.size();
      row_type.push_back(f[0][0]);
      ConstraintBlock b;
      b.cone = f[0] == "E" ? ConeKind::Zero : ConeKind::Nonnegative;
      b.rows = 1;
      b.offset.assign(1, 0.0);
      b.label = f[1];
      p.blocks.push_back(std::move(b));
    } else if (section == "COLUMNS") {
      if (f.size() == 3 && f[1] == "'MARKER'") {
        if (f[2] == "'INTORG'") {
          in_int = true;
        } else if (f[2] == "'INTEND'") {
          in_int = false;
        } else {
          r.fail("unknown marker " + f[2]);
        }
        continue;
      }
      if (f.size() != 3 && f.size() != 5) r.fail("COLUMNS entry needs 3 or 5 fields");
      const std::size_t j = col(f[0], true);
      if (in_int) {
        p.integer[j] = 1;
        p.upper[j] = 1.0;  // MPS convention for integer columns without bounds
      }
      for (std::size_t k = 1; k + 1 < f.size(); k += 2) row_entry(j, f[k], detail::parse_value(r, f[k + 1]));
    } else if (section == "RHS") {
      if (f.size() != 3 && f.size() != 5) r.fail("RHS entry needs 3 or 5 fields");
      for (std::size_t k = 1; k + 1 < f.size(); k += 2) {
        const double v = detail::parse_value(r, f[k + 1]);
        if (f[k] == obj_row) {
          p.objective_offset = -v;
          continue;
        }
        auto it = row_index.find(f[k]);
        if (it == row_index.end()) r.fail("unknown row '" + f[k] + "'");
        // a'x (>=|=) b  ->  a'x - b,  L rows  ->  b - a'x
        p.blocks[it->second].offset[0] = row_type[it->second] == 'L' ? v : -v;
      }
    } else if (section == "BOUNDS") {
      if (f.size() < 3) r.fail("BOUNDS entry needs at least 3 fields");
      const std::string& type = f[0];
      const std::size_t j = col(f[2], false);
      auto value = [&]() {
        if (f.size() != 4) r.fail("bound " + type + " needs a value");
        return detail::parse_value(r, f[3]);
      };
      if (type == "BV") {
        p.integer[j] = 1;
        p.lower[j] = 0.0;
        p.upper[j] = 1.0;
      } else if (type == "FR") {
        p.lower[j] = -kInf;
        p.upper[j] = kInf;
      } else if (type == "MI") {
        p.lower[j] = -kInf;
      } else if (type == "PL") {
        p.upper[j] = kInf;
      } else if (type == "LO" || type == "LI") {
        p.lower[j] = value();
      } else if (type == "UP" || type == "UI") {
        p.upper[j] = value();
      } else if (type == "FX") {
        p.lower[j] = p.upper[j] = value();
      } else {
        r.fail("unknown bound type '" + type + "'");
      }
      if (type == "LI" || type == "UI") p.integer[j] = 1;
    } else if (section == "QMATRIX") {
      if (f.size() != 3) r.fail("QMATRIX entry needs 3 fields");
      const std::size_t a = col(f[0], false);
      const std::size_t b = col(f[1], false);
      if (a >= b) p.quadratic.push_back({a, b, detail::parse_value(r, f[2])});
    } else {
      r.fail("entry outside of a section");
    }
  }
  if (!ended) r.fail("missing ENDATA");
  for (auto& b : p.blocks) ProgramBuilder::canonicalize(b);
  ProgramBuilder::canonicalize_quadratic(p.quadratic);
  return p;
}

}  // namespace rankone
