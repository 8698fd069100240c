#include "dbnapprox/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "dbnapprox/errors.hpp"
#include "dbnapprox/rng.hpp"
#include "dbnapprox/summation.hpp"

namespace dbnapprox {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Nodes per axis for the frozen convolution grid: enough to resolve the
// sigma-wide kernel across the target box, clamped to keep evaluations cheap.
int conv_points(const Box& box, double sigma, int dim) {
  double longest = 0.0;
  for (int i = 0; i < dim; ++i)
    longest = std::max(longest, box.hi[static_cast<std::size_t>(i)] -
                                    box.lo[static_cast<std::size_t>(i)]);
  const double wanted = 24.0 * longest / sigma;
  const int hi_cap = dim == 1 ? 16384 : (dim == 2 ? 512 : 64);
  return std::clamp(static_cast<int>(std::ceil(wanted)), 64, hi_cap);
}

double scaled_kernel(const ParentalDensity& parent, double sigma, int dim,
                     std::span<const double> diff) {
  double local[8];
  for (int i = 0; i < dim; ++i) local[static_cast<std::size_t>(i)] =
      diff[static_cast<std::size_t>(i)] / sigma;
  const double v = parent(std::span<const double>(local, static_cast<std::size_t>(dim)));
  return v * std::pow(sigma, -dim);
}

}  // namespace

double SmoothedDensity::operator()(std::span<const double> x) const {
  if (x.size() != static_cast<std::size_t>(dim_))
    throw std::domain_error("SmoothedDensity: dimension mismatch");
  const std::size_t d = static_cast<std::size_t>(dim_);
  switch (mode_) {
    case ConvolveMode::closed_form_gaussian: {
      double total = 0.0;
      for (std::size_t i = 0; i < cf_weights_.size(); ++i) {
        const double s = cf_scales_[i];
        double ss = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
          const double z = (x[k] - cf_means_[i * d + k]) / s;
          ss += z * z;
        }
        total += cf_weights_[i] * std::exp(-0.5 * ss) /
                 std::pow(kTwoPi * s * s, 0.5 * dim_);
      }
      return total;
    }
    case ConvolveMode::quadrature: {
      PairwiseAccumulator acc;
      double diff[8];
      const std::size_t n = quad_fw_.size();
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < d; ++k) diff[k] = x[k] - quad_nodes_[i * d + k];
        acc.add(quad_fw_[i] *
                scaled_kernel(parent_, sigma_, dim_, std::span<const double>(diff, d)));
      }
      return acc.total();
    }
    case ConvolveMode::monte_carlo: {
      PairwiseAccumulator acc;
      double diff[8];
      const std::size_t n = mc_draws_.size() / d;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < d; ++k) diff[k] = x[k] - mc_draws_[i * d + k];
        acc.add(scaled_kernel(parent_, sigma_, dim_, std::span<const double>(diff, d)));
      }
      return acc.total() / static_cast<double>(n);
    }
    default:
      throw PreconditionError("SmoothedDensity: unresolved evaluator mode");
  }
}

DensityFn SmoothedDensity::fn() const {
  return [self = *this](std::span<const double> x) { return self(x); };
}

std::pair<double, double> SmoothedDensity::value_and_se(std::span<const double> x) const {
  if (mode_ != ConvolveMode::monte_carlo)
    throw PreconditionError("value_and_se is only defined for the monte_carlo evaluator");
  const std::size_t d = static_cast<std::size_t>(dim_);
  PairwiseAccumulator acc, acc2;
  double diff[8];
  const std::size_t n = mc_draws_.size() / d;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) diff[k] = x[k] - mc_draws_[i * d + k];
    const double v = scaled_kernel(parent_, sigma_, dim_, std::span<const double>(diff, d));
    acc.add(v);
    acc2.add(v * v);
  }
  const double mean = acc.total() / static_cast<double>(n);
  const double var = std::max(0.0, acc2.total() / static_cast<double>(n) - mean * mean);
  return {mean, std::sqrt(var / static_cast<double>(n))};
}

Box SmoothedDensity::support_box() const {
  if (mode_ == ConvolveMode::closed_form_gaussian) {
    Box b = Box::cube(dim_, 0.0, 1.0);
    const std::size_t d = static_cast<std::size_t>(dim_);
    for (std::size_t k = 0; k < d; ++k) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (std::size_t i = 0; i < cf_weights_.size(); ++i) {
        lo = std::min(lo, cf_means_[i * d + k] - 12.0 * cf_scales_[i]);
        hi = std::max(hi, cf_means_[i * d + k] + 12.0 * cf_scales_[i]);
      }
      b.lo[k] = lo;
      b.hi[k] = hi;
    }
    return b;
  }
  if (!target_.support_hint())
    throw UnsupportedError("SmoothedDensity: target carries no support box");
  Box t = *target_.support_hint();
  const Box p = parent_.support_box();
  for (int i = 0; i < dim_; ++i) {
    t.lo[static_cast<std::size_t>(i)] += sigma_ * p.lo[static_cast<std::size_t>(i)];
    t.hi[static_cast<std::size_t>(i)] += sigma_ * p.hi[static_cast<std::size_t>(i)];
  }
  return t;
}

SmoothedDensity convolve(const TargetDensity& target, const ParentalDensity& parent, double sigma,
                         ConvolveMode mode, std::size_t mc_samples, std::uint64_t seed) {
  if (!(sigma > 0.0)) throw PreconditionError("convolve: sigma must be positive");
  if (target.dim() != parent.dim())
    throw PreconditionError("convolve: target and kernel dimensions differ");

  SmoothedDensity s(target, parent, sigma);

  ConvolveMode resolved = mode;
  if (resolved == ConvolveMode::automatic) {
    if (target.is_gaussian_mixture() && parent.family() == Family::gaussian)
      resolved = ConvolveMode::closed_form_gaussian;
    else if (target.support_hint().has_value())
      resolved = ConvolveMode::quadrature;
    else if (target.has_sampler())
      resolved = ConvolveMode::monte_carlo;
    else
      throw UnsupportedError(
          "convolve: target has neither a support box (quadrature) nor a sampler (monte carlo)");
  }

  switch (resolved) {
    case ConvolveMode::closed_form_gaussian: {
      if (!target.is_gaussian_mixture() || parent.family() != Family::gaussian)
        throw UnsupportedError(
            "closed_form_gaussian requires a Gaussian-mixture target and Gaussian kernel");
      s.cf_weights_ = target.mixture_weights();
      s.cf_means_ = target.mixture_means();
      // N(c, t^2 I) * N(0, sigma^2 I) = N(c, (t^2 + sigma^2) I)
      s.cf_scales_ = target.mixture_scales();
      for (double& t : s.cf_scales_) t = std::sqrt(t * t + sigma * sigma);
      break;
    }
    case ConvolveMode::quadrature: {
      if (!target.support_hint())
        throw UnsupportedError("quadrature convolution needs a target support box");
      const Box box = *target.support_hint();
      const int pts = conv_points(box, sigma, target.dim());
      auto grid = std::make_shared<TensorGrid>(box, QuadratureRule::gauss_legendre_composite, pts);
      const std::size_t d = static_cast<std::size_t>(target.dim());
      s.quad_nodes_.resize(grid->size() * d);
      s.quad_fw_.resize(grid->size());
      double x[8];
      for (std::size_t i = 0; i < grid->size(); ++i) {
        const double w = grid->node(i, std::span<double>(x, d));
        for (std::size_t k = 0; k < d; ++k) s.quad_nodes_[i * d + k] = x[k];
        s.quad_fw_[i] = w * target(std::span<const double>(x, d));
      }
      s.quad_grid_ = std::move(grid);
      break;
    }
    case ConvolveMode::monte_carlo: {
      if (!target.has_sampler())
        throw UnsupportedError("monte_carlo convolution needs a target sampler");
      if (mc_samples < 1) throw PreconditionError("convolve: mc_samples must be >= 1");
      s.mc_draws_ = target.sample(seed, mc_samples);
      break;
    }
    default:
      throw PreconditionError("convolve: mode could not be resolved");
  }
  s.mode_ = resolved;
  return s;
}

double select_sigma(const TargetDensity& target, const ParentalDensity& parent, double q,
                    double tolerance, const QuadratureSpec& spec) {
  if (!(tolerance > 0.0)) throw PreconditionError("select_sigma: tolerance must be positive");
  if (std::isnan(q) || q < 1.0) throw PreconditionError("select_sigma: q must lie in [1, inf]");

  constexpr int kMaxHalvings = 20;
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= kMaxHalvings; ++k) {
    const double sigma = std::ldexp(1.0, -k);
    const SmoothedDensity sm = convolve(target, parent, sigma);
    const DistanceReport rep = std::isinf(q)
                                   ? sup_distance(target.fn(), sm.fn(), spec)
                                   : lq_distance(target.fn(), sm.fn(), q, spec);
    if (rep.value <= tolerance) return sigma;
    best = std::min(best, rep.value);
  }
  std::ostringstream os;
  os << "select_sigma: no sigma in {2^0..2^-" << kMaxHalvings << "} reached tolerance "
     << tolerance << " (best error " << best << ")";
  throw ConvergenceError(os.str(), best);
}

}  // namespace dbnapprox
