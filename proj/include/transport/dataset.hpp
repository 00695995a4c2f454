#pragma once

// Core data model: the trial-location sample (covariates, randomized
// treatment, outcome), the target-location sample (covariates only), the
// sensitivity parameters, and the bounds container shared by the solvers.
// All types are plain immutable-by-convention values; operations are pure.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "transport/errors.hpp"

namespace transport {

/// One unit from the trial location.
struct SourceUnit {
  std::vector<double> x;
  int w = 0;       // treatment indicator, 0 or 1
  double y = 0.0;  // observed outcome
};

/// One unit from the target location; only covariates are observed there.
struct TargetUnit {
  std::vector<double> x;
};

/// Trial-location sample. The randomization probability is known by design;
/// it is carried as metadata, while the estimators normalize by the realized
/// arm counts.
struct SourceDataset {
  std::vector<SourceUnit> units;
  double propensity = 0.5;

  std::size_t size() const { return units.size(); }
  std::size_t dim() const { return units.empty() ? 0 : units.front().x.size(); }
  std::size_t treated_count() const {
    std::size_t n = 0;
    for (const auto& u : units) n += (u.w == 1);
    return n;
  }
  std::size_t control_count() const { return units.size() - treated_count(); }
};

/// Target-location sample.
struct TargetDataset {
  std::vector<TargetUnit> units;

  std::size_t size() const { return units.size(); }
  std::size_t dim() const { return units.empty() ? 0 : units.front().x.size(); }
};

/// Sensitivity configuration: `gamma` bounds the unobserved distribution
/// shift ratio, `misspecification` is the extra multiplier covering density
/// ratio model error. The per-unit weight box is
/// [1/effective_bound(), effective_bound()].
struct SensitivityParams {
  double gamma = 1.0;
  double misspecification = 1.0;

  double effective_bound() const { return gamma * misspecification; }
  bool valid() const { return gamma >= 1.0 && misspecification >= 1.0; }
};

enum class SolverStatus { optimal, tolerance_relaxed, infeasible };

inline const char* to_string(SolverStatus s) {
  switch (s) {
    case SolverStatus::optimal: return "optimal";
    case SolverStatus::tolerance_relaxed: return "tolerance-relaxed";
    default: return "infeasible";
  }
}

/// Identification interval for one sensitivity setting, with the per-unit
/// weights attaining each endpoint (in source-unit order).
struct BoundsResult {
  double lower = 0.0;
  double upper = 0.0;
  std::vector<double> weights_lower;
  std::vector<double> weights_upper;
  SolverStatus status = SolverStatus::optimal;
};

enum class Severity { warning, error };

struct ValidationIssue {
  Severity severity = Severity::error;
  std::string message;
};

using ValidationReport = std::vector<ValidationIssue>;

/// True when the report carries no error-severity entries.
inline bool passed(const ValidationReport& report) {
  for (const auto& issue : report)
    if (issue.severity == Severity::error) return false;
  return true;
}

/// Check a source/target pair against every downstream shape precondition.
/// An empty report means fully valid; constant covariate columns are only
/// warnings because the intercept in the basis absorbs them.
inline ValidationReport validate_pair(const SourceDataset& src, const TargetDataset& tgt) {
  ValidationReport report;
  auto error = [&](std::string msg) {
    report.push_back({Severity::error, std::move(msg)});
  };
  auto warn = [&](std::string msg) {
    report.push_back({Severity::warning, std::move(msg)});
  };

  if (src.units.empty()) error("source dataset is empty");
  if (tgt.units.empty()) error("target dataset is empty");
  if (!(src.propensity > 0.0 && src.propensity < 1.0))
    error("propensity must lie strictly between 0 and 1");

  const std::size_t d = src.dim();
  bool shape_ok = true;
  for (std::size_t i = 0; i < src.units.size(); ++i) {
    const auto& u = src.units[i];
    if (u.x.size() != d) {
      error("source unit " + std::to_string(i) + " has covariate dimension " +
            std::to_string(u.x.size()) + ", expected " + std::to_string(d));
      shape_ok = false;
      continue;
    }
    for (std::size_t j = 0; j < d; ++j) {
      if (!std::isfinite(u.x[j])) {
        error("source unit " + std::to_string(i) + " covariate x" +
              std::to_string(j + 1) + " is not finite");
        break;
      }
    }
    if (u.w != 0 && u.w != 1)
      error("source unit " + std::to_string(i) + " has treatment indicator " +
            std::to_string(u.w) + ", expected 0 or 1");
    if (!std::isfinite(u.y))
      error("source unit " + std::to_string(i) + " outcome is not finite");
  }
  for (std::size_t i = 0; i < tgt.units.size(); ++i) {
    const auto& u = tgt.units[i];
    if (u.x.size() != d) {
      error("target unit " + std::to_string(i) + " has covariate dimension " +
            std::to_string(u.x.size()) + ", expected " + std::to_string(d));
      shape_ok = false;
      continue;
    }
    for (std::size_t j = 0; j < u.x.size(); ++j) {
      if (!std::isfinite(u.x[j])) {
        error("target unit " + std::to_string(i) + " covariate x" +
              std::to_string(j + 1) + " is not finite");
        break;
      }
    }
  }

  if (!src.units.empty()) {
    if (src.treated_count() == 0) error("source treated arm is empty");
    if (src.control_count() == 0) error("source control arm is empty");
  }

  if (shape_ok && !src.units.empty() && !tgt.units.empty()) {
    auto constant_column = [d](const auto& units, std::size_t j) {
      const double first = units.front().x[j];
      for (const auto& u : units)
        if (u.x[j] != first) return false;
      return true;
    };
    for (std::size_t j = 0; j < d; ++j) {
      if (constant_column(src.units, j))
        warn("source covariate x" + std::to_string(j + 1) + " is constant");
      if (constant_column(tgt.units, j))
        warn("target covariate x" + std::to_string(j + 1) + " is constant");
    }
  }
  return report;
}

/// Plain difference of arm means, mean(y | w=1) - mean(y | w=0).
inline double difference_in_means(const SourceDataset& data) {
  double sum1 = 0.0, sum0 = 0.0;
  std::size_t n1 = 0, n0 = 0;
  for (const auto& u : data.units) {
    if (u.w == 1) {
      sum1 += u.y;
      ++n1;
    } else {
      sum0 += u.y;
      ++n0;
    }
  }
  if (n1 == 0 || n0 == 0)
    throw DataError("difference_in_means requires a nonempty treated and control arm");
  return sum1 / static_cast<double>(n1) - sum0 / static_cast<double>(n0);
}

}  // namespace transport
