#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "dbnapprox/densities.hpp"
#include "dbnapprox/metrics.hpp"

namespace dbnapprox {

enum class ConvolveMode { automatic, closed_form_gaussian, quadrature, monte_carlo };

/// The mollified target f * phi_sigma, where phi_sigma(u) = sigma^{-d} phi(u/sigma).
/// Immutable after construction; the internal node/sample caches make
/// evaluation read-only and safe to call from several threads.
class SmoothedDensity {
 public:
  double operator()(std::span<const double> x) const;
  DensityFn fn() const;

  /// Monte Carlo mode only: point value together with the standard error of
  /// the sample mean at that point.
  std::pair<double, double> value_and_se(std::span<const double> x) const;

  const TargetDensity& target() const { return target_; }
  const ParentalDensity& parent() const { return parent_; }
  double sigma() const { return sigma_; }
  ConvolveMode mode() const { return mode_; }
  std::size_t mc_samples() const { return mc_draws_.size() / static_cast<std::size_t>(dim_); }
  int dim() const { return dim_; }

  /// Minkowski sum of the target box and the sigma-scaled kernel box.
  Box support_box() const;

 private:
  friend SmoothedDensity convolve(const TargetDensity&, const ParentalDensity&, double,
                                  ConvolveMode, std::size_t, std::uint64_t);

  TargetDensity target_;
  ParentalDensity parent_;
  double sigma_ = 1.0;
  ConvolveMode mode_ = ConvolveMode::quadrature;
  int dim_ = 1;

  // closed_form_gaussian: the convolved Gaussian mixture.
  std::vector<double> cf_weights_, cf_means_, cf_scales_;

  // quadrature: target values and weights frozen on a tensor grid over the
  // target box, so each evaluation is one pass over precomputed nodes.
  std::shared_ptr<const TensorGrid> quad_grid_;
  std::vector<double> quad_nodes_;   // flattened, stride dim
  std::vector<double> quad_fw_;      // f(node) * node weight

  // monte_carlo: cached draws from the target, flattened, stride dim.
  std::vector<double> mc_draws_;

  SmoothedDensity(TargetDensity t, ParentalDensity p, double s)
      : target_(std::move(t)), parent_(std::move(p)), sigma_(s), dim_(target_.dim()) {}
};

/// Builds the evaluator for f * phi_sigma. Mode resolution under `automatic`:
/// closed form when the target is a Gaussian mixture and the kernel is
/// Gaussian; otherwise quadrature over the target's support box; otherwise
/// Monte Carlo from the target's sampler (UnsupportedError when neither a box
/// nor a sampler exists). mc_samples and seed only matter in Monte Carlo mode.
SmoothedDensity convolve(const TargetDensity& target, const ParentalDensity& parent, double sigma,
                         ConvolveMode mode = ConvolveMode::automatic,
                         std::size_t mc_samples = 100000, std::uint64_t seed = 1);

/// Largest sigma on the grid {1, 1/2, 1/4, ...} (k_max = 20 halvings) whose
/// smoothing error ||f - f*phi_sigma||_q over spec.domain is at most
/// tolerance. q may be infinity (sup norm; the target must be uniformly
/// continuous for the limit to exist, which the caller asserts). Throws
/// ConvergenceError carrying the best error seen when the grid is exhausted.
double select_sigma(const TargetDensity& target, const ParentalDensity& parent, double q,
                    double tolerance, const QuadratureSpec& spec);

}  // namespace dbnapprox
