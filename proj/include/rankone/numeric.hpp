#pragma once

#include <Eigen/Dense>

#include <charconv>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "rankone/error.hpp"

namespace rankone {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline const double kSqrt2 = std::sqrt(2.0);

// Scaled lower-triangle storage of symmetric matrices. Entries are ordered
// column by column, (0,0), (1,0), ..., (k-1,0), (1,1), (2,1), ..., and every
// off-diagonal entry carries a factor sqrt(2), so that
// svec(A).dot(svec(B)) == trace(A * B).
inline std::size_t svec_size(std::size_t order) { return order * (order + 1) / 2; }

inline std::size_t svec_index(std::size_t order, std::size_t row, std::size_t col) {
  if (row < col) std::swap(row, col);
  // Column `col` starts after the entries of the previous columns.
  return col * order - col * (col - 1) / 2 + (row - col);
}

/// Inverse of svec_size; returns 0 when `len` is not a triangular number.
inline std::size_t svec_order(std::size_t len) {
  std::size_t k = 0;
  while (svec_size(k) < len) ++k;
  return svec_size(k) == len ? k : 0;
}

inline Vector svec(const Matrix& m) {
  const auto k = static_cast<std::size_t>(m.rows());
  Vector out(static_cast<Eigen::Index>(svec_size(k)));
  Eigen::Index pos = 0;
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t i = j; i < k; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      const auto jj = static_cast<Eigen::Index>(j);
      out(pos++) = i == j ? m(ii, jj) : kSqrt2 * 0.5 * (m(ii, jj) + m(jj, ii));
    }
  }
  return out;
}

inline Matrix smat(const Eigen::Ref<const Vector>& v) {
  const std::size_t k = svec_order(static_cast<std::size_t>(v.size()));
  Matrix m(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  Eigen::Index pos = 0;
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t i = j; i < k; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      const auto jj = static_cast<Eigen::Index>(j);
      const double val = i == j ? v(pos) : v(pos) / kSqrt2;
      m(ii, jj) = val;
      m(jj, ii) = val;
      ++pos;
    }
  }
  return m;
}

/// Smallest eigenvalue of a symmetric matrix (+inf for an empty matrix).
inline double min_eigenvalue(const Matrix& m) {
  if (m.rows() == 0) return kInf;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
  return eig.eigenvalues()(0);
}

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (std::isnan(value)) return "nan";
  if (value == 0.0) return "0";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

inline bool parse_double(std::string_view text, double& out) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
    text.remove_suffix(1);
  }
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  if (text == "inf" || text == "Inf") { out = kInf; return true; }
  if (text == "-inf" || text == "-Inf") { out = -kInf; return true; }
  auto res = std::from_chars(text.data(), text.data() + text.size(), out);
  return res.ec == std::errc() && res.ptr == text.data() + text.size();
}

inline Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline std::vector<double> to_std(const Eigen::Ref<const Vector>& v) {
  return {v.data(), v.data() + v.size()};
}

inline void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw Error(ErrorCode::DimensionMismatch,
                std::string(what) + ": " + std::to_string(a) + " vs " + std::to_string(b));
  }
}

}  // namespace rankone
