#pragma once

// Percentile bootstrap for the interval endpoints. Every replicate resamples
// both locations with replacement, refits the density ratio, and recomputes
// the bounds, so the confidence interval reflects estimation noise in the
// fitted weights as well as sampling noise in the outcomes.
//
// Replicate k draws from rng substream substream_seed(seed, k): first the n0
// source indices, then the n1 target indices, from the same engine. Results
// are therefore identical whether replicates run serially or in parallel.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "transport/basis.hpp"
#include "transport/bounds.hpp"
#include "transport/dataset.hpp"
#include "transport/density_ratio.hpp"
#include "transport/errors.hpp"
#include "transport/rng.hpp"

namespace transport {

enum class BoundsEstimator { balanced, unbalanced };

inline const char* to_string(BoundsEstimator e) {
  return e == BoundsEstimator::balanced ? "balanced" : "unbalanced";
}

/// Type-7 percentile: linear interpolation between order statistics.
inline double percentile_type7(std::vector<double> values, double q) {
  if (values.empty()) throw DataError("percentile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw DataError("percentile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const std::size_t i = static_cast<std::size_t>(h);
  if (i + 1 >= values.size()) return values.back();
  return values[i] + (h - static_cast<double>(i)) * (values[i + 1] - values[i]);
}

/// Index resampler; the default draws i.i.d. with replacement. Tests may
/// inject their own source to pin the resamples.
using Resampler = std::function<std::vector<std::size_t>(std::uint64_t substream, std::size_t n)>;

struct BootstrapOptions {
  int n_resamples = 1000;
  double level = 0.95;
  std::uint64_t seed = 0;
  int threads = 0;  // 0 = hardware concurrency
  double max_failure_fraction = 0.05;
  Resampler resampler;  // optional injection point
  FitOptions fit_options;
  LpOptions lp_options;
};

struct BootstrapResult {
  double level = 0.95;
  int n_resamples = 0;
  std::uint64_t seed = 0;
  double lower_ci = 0.0;  // percentile (1-level)/2 of the lower replicates
  double upper_ci = 0.0;  // percentile 1-(1-level)/2 of the upper replicates
  std::vector<double> replicates_lower;
  std::vector<double> replicates_upper;
  int failures = 0;

  int successes() const { return static_cast<int>(replicates_lower.size()); }
};

namespace detail {

inline std::vector<std::size_t> default_resample(rng::Engine& eng, std::size_t n) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i)
    idx[i] = static_cast<std::size_t>(rng::uniform_below(eng, n));
  return idx;
}

}  // namespace detail

inline BootstrapResult bootstrap_bounds(const SourceDataset& src, const TargetDataset& tgt,
                                        const BasisSpec& spec, const SensitivityParams& sens,
                                        BoundsEstimator estimator,
                                        const BootstrapOptions& opts = {}) {
  if (opts.n_resamples < 1) throw DataError("bootstrap needs at least one resample");
  if (!(opts.level > 0.0 && opts.level < 1.0))
    throw DataError("bootstrap level must lie strictly between 0 and 1");

  const std::size_t n0 = src.units.size();
  const std::size_t n1 = tgt.units.size();
  std::vector<std::optional<std::pair<double, double>>> results(opts.n_resamples);

  auto run_replicate = [&](int k) {
    const std::uint64_t sub = rng::substream_seed(opts.seed, static_cast<std::uint64_t>(k));
    std::vector<std::size_t> src_idx, tgt_idx;
    if (opts.resampler) {
      src_idx = opts.resampler(sub, n0);
      tgt_idx = opts.resampler(sub, n1);
    } else {
      rng::Engine eng(sub);
      src_idx = detail::default_resample(eng, n0);
      tgt_idx = detail::default_resample(eng, n1);
    }
    SourceDataset rs;
    rs.propensity = src.propensity;
    rs.units.reserve(n0);
    for (std::size_t i : src_idx) rs.units.push_back(src.units[i]);
    TargetDataset rt;
    rt.units.reserve(n1);
    for (std::size_t i : tgt_idx) rt.units.push_back(tgt.units[i]);

    if (rs.treated_count() == 0 || rs.control_count() == 0) return;  // dropped
    try {
      const DensityRatioFit f = fit(rs, rt, spec, opts.fit_options);
      if (!f.converged()) return;
      BoundsResult b;
      if (estimator == BoundsEstimator::balanced) {
        b = solve_balanced(rs, rt, f, spec, sens, opts.lp_options);
      } else {
        b = solve_unbalanced(rs, weights(f, rs, spec), sens);
      }
      if (!std::isfinite(b.lower) || !std::isfinite(b.upper)) return;
      results[k] = std::make_pair(b.lower, b.upper);
    } catch (const SolverError&) {
      // dropped and counted
    }
  };

  unsigned n_threads = opts.threads > 0 ? static_cast<unsigned>(opts.threads)
                                        : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(opts.n_resamples));
  if (n_threads <= 1) {
    for (int k = 0; k < opts.n_resamples; ++k) run_replicate(k);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n_threads; ++t) {
      pool.emplace_back([&, t]() {
        for (int k = static_cast<int>(t); k < opts.n_resamples; k += static_cast<int>(n_threads))
          run_replicate(k);
      });
    }
    for (auto& th : pool) th.join();
  }

  BootstrapResult out;
  out.level = opts.level;
  out.n_resamples = opts.n_resamples;
  out.seed = opts.seed;
  for (const auto& r : results) {
    if (r) {
      out.replicates_lower.push_back(r->first);
      out.replicates_upper.push_back(r->second);
    } else {
      ++out.failures;
    }
  }
  if (out.failures > opts.max_failure_fraction * opts.n_resamples)
    throw SolverError("bootstrap: " + std::to_string(out.failures) + " of " +
                      std::to_string(opts.n_resamples) + " replicates failed (limit " +
                      std::to_string(opts.max_failure_fraction * 100.0) + "%)");
  const double alpha = 1.0 - opts.level;
  out.lower_ci = percentile_type7(out.replicates_lower, alpha / 2.0);
  out.upper_ci = percentile_type7(out.replicates_upper, 1.0 - alpha / 2.0);
  return out;
}

}  // namespace transport
