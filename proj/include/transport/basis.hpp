#pragma once

// Basis expansion phi(.) shared by the density ratio fit and the balancing
// constraints. Every feature vector starts with the constant 1; that
// intercept is what makes the mean of the fitted weights equal one.

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "transport/dataset.hpp"
#include "transport/errors.hpp"

namespace transport {

enum class BasisKind { identity, polynomial, custom };

/// A named, user-supplied feature for custom bases.
struct CustomFeature {
  std::string name;
  std::function<double(const std::vector<double>&)> fn;
};

/// Description of the expansion. `bound` is the declared sup-norm bound on
/// the features; it is checked empirically at fit time and reported, never
/// assumed.
struct BasisSpec {
  BasisKind kind = BasisKind::identity;
  std::size_t input_dim = 0;
  int degree = 1;                          // polynomial only
  std::vector<CustomFeature> features;     // custom only
  double bound = std::numeric_limits<double>::infinity();

  static BasisSpec identity(std::size_t input_dim) {
    return BasisSpec{BasisKind::identity, input_dim, 1, {}, std::numeric_limits<double>::infinity()};
  }
  static BasisSpec polynomial(std::size_t input_dim, int degree) {
    if (degree < 1) throw DataError("polynomial basis degree must be >= 1");
    return BasisSpec{BasisKind::polynomial, input_dim, degree, {}, std::numeric_limits<double>::infinity()};
  }
  static BasisSpec custom(std::size_t input_dim, std::vector<CustomFeature> features) {
    return BasisSpec{BasisKind::custom, input_dim, 1, std::move(features), std::numeric_limits<double>::infinity()};
  }
  /// Intercept-only expansion, phi(x) = (1).
  static BasisSpec intercept_only(std::size_t input_dim) {
    return custom(input_dim, {});
  }

  /// Number of features p, intercept included.
  std::size_t feature_count() const {
    switch (kind) {
      case BasisKind::identity: return 1 + input_dim;
      case BasisKind::polynomial: return 1 + input_dim * static_cast<std::size_t>(degree);
      default: return 1 + features.size();
    }
  }
};

/// Expand one covariate vector; the first entry is always 1.
inline std::vector<double> expand(const BasisSpec& spec, const std::vector<double>& x) {
  if (x.size() != spec.input_dim)
    throw DataError("basis expansion got a vector of dimension " + std::to_string(x.size()) +
                    ", expected " + std::to_string(spec.input_dim));
  std::vector<double> out;
  out.reserve(spec.feature_count());
  out.push_back(1.0);
  switch (spec.kind) {
    case BasisKind::identity:
      out.insert(out.end(), x.begin(), x.end());
      break;
    case BasisKind::polynomial: {
      std::vector<double> pow(x);
      for (int m = 1; m <= spec.degree; ++m) {
        if (m > 1)
          for (std::size_t j = 0; j < x.size(); ++j) pow[j] *= x[j];
        out.insert(out.end(), pow.begin(), pow.end());
      }
      break;
    }
    case BasisKind::custom:
      for (const auto& f : spec.features) {
        const double v = f.fn(x);
        if (!std::isfinite(v))
          throw DataError("custom feature '" + f.name + "' produced a non-finite value");
        out.push_back(v);
      }
      break;
  }
  for (double v : out)
    if (!std::isfinite(v)) throw DataError("basis expansion produced a non-finite feature");
  return out;
}

/// Row-major feature matrix plus the empirical sup-norm of its entries.
struct FeatureMatrix {
  std::size_t rows = 0, cols = 0;
  std::vector<double> a;
  double max_abs = 0.0;

  const double* row(std::size_t i) const { return a.data() + i * cols; }
};

/// Expand a list of covariate rows. Row i of the result equals
/// expand(spec, rows[i]); errors carry the offending row index.
inline FeatureMatrix expand_dataset(const BasisSpec& spec,
                                    const std::vector<std::vector<double>>& rows) {
  FeatureMatrix m;
  m.rows = rows.size();
  m.cols = spec.feature_count();
  m.a.reserve(m.rows * m.cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::vector<double> f;
    try {
      f = expand(spec, rows[i]);
    } catch (const DataError& e) {
      throw DataError("row " + std::to_string(i) + ": " + e.what());
    }
    for (double v : f) m.max_abs = std::max(m.max_abs, std::abs(v));
    m.a.insert(m.a.end(), f.begin(), f.end());
  }
  return m;
}

inline std::vector<std::vector<double>> covariate_rows(const SourceDataset& data) {
  std::vector<std::vector<double>> rows;
  rows.reserve(data.units.size());
  for (const auto& u : data.units) rows.push_back(u.x);
  return rows;
}

inline std::vector<std::vector<double>> covariate_rows(const TargetDataset& data) {
  std::vector<std::vector<double>> rows;
  rows.reserve(data.units.size());
  for (const auto& u : data.units) rows.push_back(u.x);
  return rows;
}

/// CLI/config encoding: "identity" or "poly:k".
inline std::string to_string(const BasisSpec& spec) {
  switch (spec.kind) {
    case BasisKind::identity: return "identity";
    case BasisKind::polynomial: return "poly:" + std::to_string(spec.degree);
    default: return "custom";
  }
}

inline BasisSpec parse_basis(const std::string& text, std::size_t input_dim) {
  if (text == "identity") return BasisSpec::identity(input_dim);
  if (text.rfind("poly:", 0) == 0) {
    int degree = 0;
    try {
      degree = std::stoi(text.substr(5));
    } catch (...) {
      throw DataError("cannot parse basis '" + text + "'");
    }
    return BasisSpec::polynomial(input_dim, degree);
  }
  throw DataError("unknown basis '" + text + "' (expected identity or poly:k)");
}

}  // namespace transport
