#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dbnapprox/box.hpp"
#include "dbnapprox/rng.hpp"

namespace dbnapprox {

using DensityFn = std::function<double(std::span<const double>)>;

enum class Family { gaussian, truncated_exponential, custom };

/// Parental density phi: the kernel whose shifted and scaled copies make up
/// mixture components. Stock families are the standard Gaussian on R^d and the
/// coordinate-wise truncated exponential on prod [0, b_i]; both have closed-form
/// L^q norms and exact samplers. Custom densities carry a user evaluator plus
/// an explicit support box.
class ParentalDensity {
 public:
  static ParentalDensity gaussian(int dim);
  static ParentalDensity truncated_exponential(std::vector<double> rates,
                                               std::vector<double> uppers);
  static ParentalDensity custom(int dim, DensityFn eval, Box support,
                                std::function<void(Rng&, std::span<double>)> sampler = {});

  Family family() const { return family_; }
  int dim() const { return dim_; }

  /// Pointwise density value. Rejects non-finite coordinates.
  double operator()(std::span<const double> x) const;
  DensityFn fn() const;

  /// Closed-form ||phi||_{L^q} for q in [1, inf]; pass q = infinity for the sup
  /// norm. Throws UnsupportedError for custom densities, where no closed form
  /// is available.
  double lq_norm(double q) const;

  /// The simplified textbook expression q^{-d/(2q)} sometimes quoted for the
  /// Gaussian L^q norm. It omits the (2pi)^{-(d/2)(1-1/q)} factor, so it only
  /// agrees with lq_norm at q = 1. Reported by the norms experiment for
  /// cross-reference, never used in computations.
  static double gaussian_quoted_lq_form(int dim, double q);

  double sup_norm() const;

  /// Box holding all but a negligible (< 1e-10) tail of the mass: exact support
  /// for the truncated exponential, +-12 per axis for the Gaussian.
  Box support_box() const;

  bool has_sampler() const;
  /// count points, flattened row-major (stride = dim). Deterministic per seed.
  std::vector<double> sample(std::uint64_t seed, std::size_t count) const;
  void sample_into(Rng& rng, std::span<double> out) const;

  const std::vector<double>& rates() const { return rates_; }
  const std::vector<double>& uppers() const { return uppers_; }

  /// One-line text form (family + parameters) used inside network files.
  std::string serialize() const;
  static ParentalDensity parse(const std::string& line);

 private:
  ParentalDensity() = default;
  Family family_ = Family::gaussian;
  int dim_ = 1;
  std::vector<double> rates_;   // truncated exponential lambda_i
  std::vector<double> uppers_;  // truncated exponential b_i
  DensityFn custom_eval_;
  std::optional<Box> custom_support_;
  std::function<void(Rng&, std::span<double>)> custom_sampler_;
};

/// phi_{mu,sigma}(x) = sigma^{-d} phi((x - mu)/sigma).
struct ShiftedScaled {
  ParentalDensity parent;
  std::vector<double> shift;
  double scale = 1.0;

  ShiftedScaled(ParentalDensity p, std::vector<double> mu, double sigma);
  double operator()(std::span<const double> x) const;
  DensityFn fn() const;
  /// ||phi_{mu,sigma}||_q = sigma^{-d(1-1/q)} ||phi||_q (q = inf: sigma^{-d}).
  double lq_norm(double q) const;
  Box support_box() const;
  void sample_into(Rng& rng, std::span<double> out) const;
};

/// Scale factor sigma^{-d(1-1/q)} relating ||phi_{mu,sigma}||_q to ||phi||_q.
double lq_scale_factor(double sigma, int dim, double q);

/// Upsilon_q = max(1, E|Z|^q)^{1/q} for Z standard normal, evaluated by
/// adaptive quadrature of the defining integral. Equals 1 for q <= 2.
double upsilon(double q);

/// The alternate printed expression sqrt(2) pi^{-1/(2q)} Gamma((q+1)/2), which
/// disagrees with the defining integral for q > 2 (it lacks the 1/q root).
/// Reported for cross-reference only.
double upsilon_quoted_form(double q);

/// Approximation target f. Stock kinds carry the structure needed elsewhere:
/// Gaussian mixtures enable closed-form convolution against a Gaussian parent,
/// stock kinds have exact samplers and support boxes. lower_bound_eta is a
/// caller-provided (or stock-known) pointwise lower bound on the support.
class TargetDensity {
 public:
  static TargetDensity standard_gaussian(int dim);
  /// weights on the simplex; means flattened (k x dim); one isotropic scale per
  /// component.
  static TargetDensity gaussian_mixture(std::vector<double> weights, std::vector<double> means,
                                        std::vector<double> scales, int dim);
  static TargetDensity from_parental(const ParentalDensity& p);
  static TargetDensity uniform_box(Box b);
  /// The clipped-ramp family on [0,1]: f_m(x) = C_m min(1, m x + 1/2) with
  /// C_m = (1 - 1/(8m))^{-1}. Integrates to one exactly; f_m(0) = C_m / 2.
  static TargetDensity clipped_ramp(int m);
  static TargetDensity custom(int dim, DensityFn eval, std::optional<Box> support = {},
                              std::function<void(Rng&, std::span<double>)> sampler = {},
                              double lower_bound_eta = 0.0);

  int dim() const { return dim_; }
  double operator()(std::span<const double> x) const;
  DensityFn fn() const;

  const std::optional<Box>& support_hint() const { return support_; }
  double lower_bound_eta() const { return eta_; }
  void set_lower_bound_eta(double eta) { eta_ = eta; }

  bool has_sampler() const;
  std::vector<double> sample(std::uint64_t seed, std::size_t count) const;
  void sample_into(Rng& rng, std::span<double> out) const;

  /// Gaussian-mixture structure, when present (enables closed-form smoothing).
  bool is_gaussian_mixture() const { return !gm_weights_.empty(); }
  const std::vector<double>& mixture_weights() const { return gm_weights_; }
  const std::vector<double>& mixture_means() const { return gm_means_; }
  const std::vector<double>& mixture_scales() const { return gm_scales_; }

  /// Normalization constant of the clipped ramp.
  static double clipped_ramp_constant(int m);

 private:
  TargetDensity() = default;
  int dim_ = 1;
  DensityFn eval_;
  std::optional<Box> support_;
  std::function<void(Rng&, std::span<double>)> sampler_;
  double eta_ = 0.0;
  std::vector<double> gm_weights_, gm_means_, gm_scales_;
};

}  // namespace dbnapprox
