#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace transport {

/// Malformed input data: bad CSV, shape mismatch, empty arm, non-finite value.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// An optimizer could not produce a usable result.
struct SolverError : std::runtime_error {
  explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

/// A feature separates one arm from the target, so the tilting objective is
/// unbounded below and no finite coefficient vector exists.
struct SeparationError : SolverError {
  SeparationError(const std::string& what, std::size_t feature)
      : SolverError(what), feature_index(feature) {}
  std::size_t feature_index;
};

/// Linear program still infeasible at the loosest equality tolerance tried.
/// `min_infeasibility` is the phase-1 optimum at that tolerance.
struct InfeasibleError : SolverError {
  InfeasibleError(const std::string& what, double infeasibility)
      : SolverError(what), min_infeasibility(infeasibility) {}
  double min_infeasibility;
};

}  // namespace transport
