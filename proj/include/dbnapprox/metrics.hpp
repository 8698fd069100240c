#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "dbnapprox/box.hpp"
#include "dbnapprox/densities.hpp"

namespace dbnapprox {

enum class QuadratureRule { midpoint, gauss_legendre_composite };

/// Tensor-product quadrature description. points_per_axis counts nodes per
/// axis at the reporting resolution; every distance is also evaluated at half
/// that resolution to produce the error estimate. The node budget guards the
/// finer grid; exceeding it raises ResourceError suggesting the Monte Carlo
/// estimator.
struct QuadratureSpec {
  Box domain;
  QuadratureRule rule = QuadratureRule::gauss_legendre_composite;
  int points_per_axis = 512;
  double tail_padding = 0.0;
  std::size_t node_budget = std::size_t{1} << 24;

  QuadratureSpec() = default;
  explicit QuadratureSpec(Box b) : domain(std::move(b)) {}
  QuadratureSpec with_points(int p) const {
    QuadratureSpec s = *this;
    s.points_per_axis = p;
    return s;
  }
  QuadratureSpec with_domain(Box b) const {
    QuadratureSpec s = *this;
    s.domain = std::move(b);
    return s;
  }
  Box effective_domain() const { return domain.padded(tail_padding); }
};

enum class Estimator { quadrature, monte_carlo };

struct DistanceReport {
  double value = 0.0;
  Estimator estimator = Estimator::quadrature;
  double error_estimate = 0.0;
  std::size_t nodes_or_samples = 0;
};

/// One axis of quadrature nodes; tensor grids are products of these.
struct AxisRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Nodes and weights for one axis over [lo, hi]. The composite Gauss-Legendre
/// rule uses order-10 panels, so the realized count is points rounded up to a
/// multiple of 10.
AxisRule axis_rule(QuadratureRule rule, double lo, double hi, int points);

/// Tensor grid over a box; exposes flat iteration over all nodes.
class TensorGrid {
 public:
  TensorGrid(const Box& box, QuadratureRule rule, int points_per_axis);
  std::size_t size() const { return total_; }
  int dim() const { return static_cast<int>(axes_.size()); }
  /// Fills x (size dim) with node coordinates; returns the node weight.
  double node(std::size_t index, std::span<double> x) const;

 private:
  std::vector<AxisRule> axes_;
  std::size_t total_ = 1;
};

/// (int |f-g|^q)^{1/q} over spec.domain. error_estimate compares the reported
/// resolution against half resolution.
DistanceReport lq_distance(const DensityFn& f, const DensityFn& g, double q,
                           const QuadratureSpec& spec);

/// max |f-g| over a midpoint refinement grid (never touches box edges, so
/// boundary discontinuities do not contribute); two refinement levels are
/// compared for the error estimate.
DistanceReport sup_distance(const DensityFn& f, const DensityFn& g, const QuadratureSpec& spec);

/// KL(f||g) = int_domain f log(f/g). Nodes where g underflows (< 1e-300) while
/// f does not force the value to +infinity; nodes with f below the floor
/// contribute zero (x log x -> 0).
DistanceReport kl_divergence(const DensityFn& f, const DensityFn& g, const QuadratureSpec& spec);

struct KlBoundCheck {
  double kl = 0.0;
  double l2 = 0.0;
  double bound = 0.0;   // l2^2 / eta
  double margin = 0.0;  // quadrature slack added to the bound before comparing
  bool holds = false;
};

/// Verifies f,g >= eta at every node (PreconditionError naming the first
/// offending node otherwise), then checks KL(f||g) <= ||f-g||_2^2 / eta within
/// quadrature error.
KlBoundCheck kl_l2_bound_check(const DensityFn& f, const DensityFn& g, double eta,
                               const QuadratureSpec& spec);

/// Importance-sampling estimate of (int |f-g|^q)^{1/q} using draws from f:
/// E_{x~f} |f-g|^q / f. Escape hatch for dimensions where tensor grids blow
/// the node budget. error_estimate is the delta-method standard error.
DistanceReport lq_distance_monte_carlo(const DensityFn& f,
                                       const std::function<std::vector<double>(std::uint64_t,
                                                                               std::size_t)>& f_sampler,
                                       const DensityFn& g, double q, int dim,
                                       std::size_t samples, std::uint64_t seed);

/// int_domain f, with the same two-resolution error estimate. Used by
/// normalization checks.
DistanceReport integrate(const DensityFn& f, const QuadratureSpec& spec);

}  // namespace dbnapprox
