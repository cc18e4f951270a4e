#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "rankone/error.hpp"
#include "rankone/numeric.hpp"

namespace rankone {

/// Labeled points. Raw features never include the intercept; when
/// `intercept` is set a leading 1 is prepended at model-build time, so the
/// model dimension is p + 1.
struct SvmDataset {
  Matrix features;             // n x p
  std::vector<double> labels;  // +-1
  bool intercept = true;

  SvmDataset() = default;
  SvmDataset(Matrix f, std::vector<double> y, bool with_intercept = true)
      : features(std::move(f)), labels(std::move(y)), intercept(with_intercept) {
    check();
  }

  void check() const {
    require_same_size(static_cast<std::size_t>(features.rows()), labels.size(), "labels vs feature rows");
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] != 1.0 && labels[i] != -1.0) {
        throw Error(ErrorCode::LabelDomainError, "label " + std::to_string(i) + " is not +-1");
      }
    }
  }

  std::size_t n() const { return labels.size(); }
  std::size_t p() const { return static_cast<std::size_t>(features.cols()); }
  std::size_t p_tilde() const { return p() + (intercept ? 1 : 0); }

  /// Feature row with the intercept entry prepended when enabled.
  Vector augmented(std::size_t i) const {
    Vector a(static_cast<Eigen::Index>(p_tilde()));
    Eigen::Index off = 0;
    if (intercept) a(off++) = 1.0;
    a.tail(static_cast<Eigen::Index>(p())) = features.row(static_cast<Eigen::Index>(i)).transpose();
    return a;
  }

  /// Signed matrix A with rows y_i * augmented(i).
  Matrix signed_matrix() const {
    Matrix A(static_cast<Eigen::Index>(n()), static_cast<Eigen::Index>(p_tilde()));
    for (std::size_t i = 0; i < n(); ++i) A.row(static_cast<Eigen::Index>(i)) = labels[i] * augmented(i).transpose();
    return A;
  }

  SvmDataset subset(const std::vector<std::size_t>& rows) const {
    SvmDataset out;
    out.intercept = intercept;
    out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
    for (std::size_t k = 0; k < rows.size(); ++k) {
      out.features.row(static_cast<Eigen::Index>(k)) = features.row(static_cast<Eigen::Index>(rows[k]));
      out.labels.push_back(labels.at(rows[k]));
    }
    return out;
  }
};

}  // namespace rankone
