#pragma once

// Seeded synthetic SVM instances, label flips, splits and CSV I/O.
//
// Random streams: every draw comes from a std::mt19937_64 seeded with
// splitmix64(seed + stream * 0x9E3779B97F4A7C15). Stream 0 draws the
// direction d; point i of a sample uses stream i + 1 of the sample seed.
// Uniforms take the top 53 bits of one engine output; normals use the
// Marsaglia polar method, so values do not depend on the standard library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "rankone/dataset.hpp"
#include "rankone/error.hpp"
#include "rankone/io.hpp"
#include "rankone/numeric.hpp"

namespace rankone {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed + stream * 0x9E3779B97F4A7C15ULL);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t seed, std::uint64_t stream) : engine_(substream_seed(seed, stream)) {}

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

enum class OutlierClass { None, Clustered, Spread };

inline const char* to_string(OutlierClass c) {
  switch (c) {
    case OutlierClass::None: return "none";
    case OutlierClass::Clustered: return "clustered";
    case OutlierClass::Spread: return "spread";
  }
  return "?";
}

inline OutlierClass parse_outlier_class(const std::string& s) {
  if (s == "none") return OutlierClass::None;
  if (s == "clustered") return OutlierClass::Clustered;
  if (s == "spread") return OutlierClass::Spread;
  throw Error(ErrorCode::InvalidSpec, "unknown outlier class '" + s + "'");
}

struct GenSpec {
  OutlierClass outlier_class = OutlierClass::None;
  std::size_t n = 100;
  std::size_t p = 2;
  double sigma = 0.5;
  std::uint64_t seed = 1;

  void check() const {
    if (n < 1 || p < 1) throw Error(ErrorCode::InvalidSpec, "n and p must be at least 1");
    if (!(sigma > 0)) throw Error(ErrorCode::NonPositiveParams, "sigma must be positive");
  }
};

struct GeneratedInstance {
  SvmDataset dataset;
  Vector direction;  // d
  Vector bayes_w;    // (0, d)
  GenSpec spec;
};

/// d with entries uniform in [-1, 1]; redrawn (up to 64 times) when zero.
inline Vector draw_direction(std::size_t p, std::uint64_t seed) {
  Rng rng(seed, 0);
  for (int attempt = 0; attempt < 64; ++attempt) {
    Vector d(static_cast<Eigen::Index>(p));
    for (Eigen::Index j = 0; j < d.size(); ++j) d(j) = rng.uniform(-1.0, 1.0);
    if (d.norm() > 0) return d;
  }
  throw Error(ErrorCode::DegenerateDirection, "direction stayed zero after 64 draws");
}

/// n points around the centroids +-0.5 d/||d|| for the given class. Point i
/// uses stream i + 1 of `seed`: one uniform picks the component, then p normals.
inline SvmDataset sample_points(OutlierClass cls, const Vector& d, std::size_t n, double sigma, std::uint64_t seed) {
  if (!(sigma > 0)) throw Error(ErrorCode::NonPositiveParams, "sigma must be positive");
  const double norm = d.norm();
  if (!(norm > 0)) throw Error(ErrorCode::DegenerateDirection, "direction has zero norm");
  const Vector alpha = 0.5 * d / norm;
  const auto p = d.size();
  Matrix f(static_cast<Eigen::Index>(n), p);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(seed, i + 1);
    const double u = rng.uniform();
    Vector center;
    double sd = sigma;
    double label;
    switch (cls) {
      case OutlierClass::None:
        label = u < 0.5 ? 1.0 : -1.0;
        center = label * alpha;
        break;
      case OutlierClass::Clustered:
        if (u < 0.45) {
          label = 1.0, center = alpha;
        } else if (u < 0.9) {
          label = -1.0, center = -alpha;
        } else {
          label = 1.0, center = -10.0 * alpha, sd = std::sqrt(0.001) * sigma;
        }
        break;
      case OutlierClass::Spread:
      default:
        if (u < 0.45) {
          label = 1.0, center = alpha;
        } else if (u < 0.9) {
          label = -1.0, center = -alpha;
        } else if (u < 0.95) {
          label = 1.0, center = alpha, sd = 10.0 * sigma;
        } else {
          label = -1.0, center = -alpha, sd = 10.0 * sigma;
        }
        break;
    }
    y[i] = label;
    for (Eigen::Index j = 0; j < p; ++j) f(static_cast<Eigen::Index>(i), j) = center(j) + sd * rng.normal();
  }
  return SvmDataset(std::move(f), std::move(y), true);
}

inline GeneratedInstance generate(const GenSpec& spec) {
  spec.check();
  GeneratedInstance out;
  out.spec = spec;
  out.direction = draw_direction(spec.p, spec.seed);
  out.bayes_w = Vector::Zero(static_cast<Eigen::Index>(spec.p + 1));
  out.bayes_w.tail(static_cast<Eigen::Index>(spec.p)) = out.direction;
  out.dataset = sample_points(spec.outlier_class, out.direction, spec.n, spec.sigma, substream_seed(spec.seed, 1));
  return out;
}

/// Negates each label independently with probability tau (label i uses
/// stream i + 1 of `seed`).
inline SvmDataset flip_labels(const SvmDataset& ds, double tau, std::uint64_t seed) {
  if (!(tau >= 0.0 && tau < 0.5)) throw Error(ErrorCode::TauOutOfRange, "tau must lie in [0, 0.5)");
  SvmDataset out = ds;
  for (std::size_t i = 0; i < out.n(); ++i) {
    Rng rng(seed, i + 1);
    if (rng.uniform() < tau) out.labels[i] = -out.labels[i];
  }
  return out;
}

struct SplitResult {
  SvmDataset train, validation, test;
  std::vector<std::size_t> train_idx, validation_idx, test_idx;
};

/// Random partition with sizes floor(n f_k) and the remainder added to train.
inline SplitResult split(const SvmDataset& ds, double f_train, double f_val, double f_test, std::uint64_t seed) {
  if (!(f_train > 0 && f_val > 0 && f_test > 0) || std::abs(f_train + f_val + f_test - 1.0) > 1e-9) {
    throw Error(ErrorCode::BadFractions, "fractions must be positive and sum to 1");
  }
  const std::size_t n = ds.n();
  const auto nv = static_cast<std::size_t>(std::floor(static_cast<double>(n) * f_val + 1e-9));
  const auto nt = static_cast<std::size_t>(std::floor(static_cast<double>(n) * f_test + 1e-9));
  const std::size_t nr = n - nv - nt;
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed, 0);
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);  // Fisher-Yates
  SplitResult r;
  r.train_idx.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(nr));
  r.validation_idx.assign(perm.begin() + static_cast<std::ptrdiff_t>(nr), perm.begin() + static_cast<std::ptrdiff_t>(nr + nv));
  r.test_idx.assign(perm.begin() + static_cast<std::ptrdiff_t>(nr + nv), perm.end());
  for (auto* v : {&r.train_idx, &r.validation_idx, &r.test_idx}) std::sort(v->begin(), v->end());
  r.train = ds.subset(r.train_idx);
  r.validation = ds.subset(r.validation_idx);
  r.test = ds.subset(r.test_idx);
  return r;
}

// ---------------------------------------------------------------------------
// CSV: header label,f1,...,fp; labels +-1 (0 read as -1); no intercept column.
// ---------------------------------------------------------------------------

inline std::string to_csv(const SvmDataset& ds) {
  std::string out = "label";
  for (std::size_t j = 0; j < ds.p(); ++j) out += ",f" + std::to_string(j + 1);
  out += '\n';
  for (std::size_t i = 0; i < ds.n(); ++i) {
    out += ds.labels[i] > 0 ? "1" : "-1";
    for (std::size_t j = 0; j < ds.p(); ++j) {
      out += ',' + format_double(ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
    out += '\n';
  }
  return out;
}

inline SvmDataset parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  auto split_line = [](const std::string& s) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(s);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!s.empty() && s.back() == ',') cells.emplace_back();
    return cells;
  };
  if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "row 1: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_line(line);
  if (header.size() < 2 || header[0] != "label") {
    throw Error(ErrorCode::ParseError, "row 1: header must be label,f1,...,fp");
  }
  const std::size_t p = header.size() - 1;
  std::vector<std::vector<double>> rows;
  std::vector<double> labels;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != p + 1) {
      throw Error(ErrorCode::ParseError, "row " + std::to_string(row) + ": expected " + std::to_string(p + 1) +
                                             " fields, found " + std::to_string(cells.size()));
    }
    double label;
    if (!parse_double(cells[0], label)) {
      throw Error(ErrorCode::ParseError, "row " + std::to_string(row) + ", column 1: bad label '" + cells[0] + "'");
    }
    if (label == 0.0) label = -1.0;
    if (label != 1.0 && label != -1.0) {
      throw Error(ErrorCode::LabelDomainError, "row " + std::to_string(row) + ": label " + cells[0] + " is not in {-1, 0, 1}");
    }
    std::vector<double> vals(p);
    for (std::size_t j = 0; j < p; ++j) {
      if (!parse_double(cells[j + 1], vals[j]) || !std::isfinite(vals[j])) {
        throw Error(ErrorCode::ParseError, "row " + std::to_string(row) + ", column " + std::to_string(j + 2) +
                                               ": bad number '" + cells[j + 1] + "'");
      }
    }
    labels.push_back(label);
    rows.push_back(std::move(vals));
  }
  Matrix f(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < p; ++j) f(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return SvmDataset(std::move(f), std::move(labels), true);
}

inline SvmDataset load_csv(const std::string& path) { return parse_csv(read_file(path)); }
inline void save_csv(const SvmDataset& ds, const std::string& path) { write_file(path, to_csv(ds)); }

inline nlohmann::json to_json(const GenSpec& s) {
  return {{"class", to_string(s.outlier_class)}, {"n", s.n}, {"p", s.p}, {"sigma", s.sigma}, {"seed", s.seed}};
}

inline nlohmann::json sidecar_json(const GeneratedInstance& g) {
  return {{"spec", to_json(g.spec)}, {"direction", to_std(g.direction)}, {"bayes_w", to_std(g.bayes_w)}};
}

inline GenSpec gen_spec_from_json(const nlohmann::json& j) {
  try {
    GenSpec s;
    s.outlier_class = parse_outlier_class(j.at("class").get<std::string>());
    s.n = j.at("n").get<std::size_t>();
    s.p = j.at("p").get<std::size_t>();
    s.sigma = j.at("sigma").get<double>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.check();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("generator spec: ") + e.what());
  }
}

}  // namespace rankone
