#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "dbnapprox/densities.hpp"
#include "dbnapprox/metrics.hpp"
#include "dbnapprox/smoothing.hpp"

namespace dbnapprox {

/// Finite location mixture sum_i alpha_i phi_{mu_i,sigma} with alpha on the
/// simplex. Shifts are stored flattened, one block of dim() coordinates per
/// component.
struct MixtureModel {
  std::vector<double> weights;
  std::vector<double> shifts;
  double sigma = 1.0;
  ParentalDensity parent;

  std::size_t components() const { return weights.size(); }
  int dim() const { return parent.dim(); }

  double operator()(std::span<const double> x) const;
  DensityFn fn() const;

  /// Enforces the structural invariants: sizes agree, weights nonnegative and
  /// summing to one within 1e-12, sigma positive. Throws PreconditionError.
  void validate() const;

  /// Smallest axis-aligned box containing every shifted kernel's support box.
  Box support_box() const;
};

/// Empirical-mean mixture: m i.i.d. shifts from the smoothing target, equal
/// weights 1/m. Deterministic per seed. UnsupportedError without a sampler.
MixtureModel maurey_sample(const SmoothedDensity& smoothed, std::size_t m, std::uint64_t seed);

/// Deterministic improvement pass toward the smoothed density in L2 over
/// spec.domain: per iteration, a candidate kernel from a fixed 512-entry pool
/// (target draws plus a uniform grid) joins the mixture with a line-searched
/// weight, the smallest-weight component is dropped to keep m fixed, and the
/// step is kept only if the measured error decreased. Every eighth iteration
/// and at the end, coordinate-wise shift polishing and a weight re-fit run
/// under the same accept-only-improving rule. Never increases the error.
MixtureModel greedy_refine(const SmoothedDensity& smoothed, const MixtureModel& initial,
                           int iterations);
MixtureModel greedy_refine(const SmoothedDensity& smoothed, const MixtureModel& initial,
                           int iterations, const QuadratureSpec& spec);

/// greedy_refine's engine, exposed for pipelines that aim at a density other
/// than the smoothed target (q = 2 for least squares, q = infinity for the
/// sup gap). pool_seed controls candidate draws; pass a sampler when the aim
/// density has one, otherwise candidates come from the grid alone.
MixtureModel refine_toward(const DensityFn& aim, const TargetDensity* aim_sampler,
                           const MixtureModel& initial, int iterations, double q,
                           const QuadratureSpec& spec, std::uint64_t pool_seed);

struct RateFit {
  std::vector<std::size_t> m_values;
  std::vector<double> mean_errors;
  double slope = 0.0;
  std::pair<double, double> slope_ci{0.0, 0.0};
  double xi_estimate = 0.0;
};

/// Maurey-rate experiment: per (m, trial) draws maurey_sample, measures the
/// L^q distance to the smoothed density over spec.domain, averages per m, and
/// fits the log-log slope by least squares. slope_ci is a 200-resample
/// bootstrap interval over trials; xi_estimate is the largest single-kernel
/// distance ||f*phi_sigma - phi_{mu,sigma}||_q over all sampled shifts.
/// Preconditions: at least 3 distinct m values, trials >= 10.
RateFit fit_rate(const SmoothedDensity& smoothed, double q,
                 const std::vector<std::size_t>& m_values, std::size_t trials,
                 std::uint64_t seed, const QuadratureSpec& spec);

}  // namespace dbnapprox
