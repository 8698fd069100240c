#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dbnapprox/binary_rbm.hpp"
#include "dbnapprox/densities.hpp"
#include "dbnapprox/metrics.hpp"
#include "dbnapprox/mixture.hpp"
#include "dbnapprox/smoothing.hpp"

namespace dbnapprox {

/// Two-hidden-layer generative model. (h1, h2) follow the RBM; given h1 = e_i
/// the visible layer has density phi_{mu_i, sigma}; h1 off the unit vectors
/// emits nothing, so the visible density integrates to 1 - deficiency.
class DeepBeliefNetwork {
 public:
  const BinaryRBM& rbm() const { return rbm_; }
  const ParentalDensity& parent() const { return parent_; }
  double sigma() const { return sigma_; }
  int dim() const { return parent_.dim(); }
  std::size_t component_count() const { return unit_probs_.size(); }
  const std::vector<double>& shifts() const { return shifts_; }

  /// First-layer unit-vector masses and leftover, cached at assembly.
  const std::vector<double>& unit_probs() const { return unit_probs_; }
  double deficiency() const { return deficiency_; }

  /// sum_i pi_1(e_i) phi_{mu_i,sigma}(x).
  double eval_visible(std::span<const double> x) const;
  DensityFn visible_fn() const;
  Box support_box() const;

  /// count visible draws, flattened (stride = dim). Conditioning on h1 being a
  /// unit vector is done by inverse CDF over the cached unit masses, which is
  /// the conditional law the resample-until-unit scheme induces. Throws when
  /// deficiency >= 0.999 (degenerate model) or the kernel has no sampler.
  std::vector<double> sample_visible(std::uint64_t seed, std::size_t count) const;

  /// Text form: parent line, RBM block, then the component table
  /// (index, shift coordinates, sigma per line). Bit-exact round-trip.
  std::string serialize() const;
  static DeepBeliefNetwork parse(const std::string& text);

 private:
  friend DeepBeliefNetwork assemble(const MixtureModel& mixture, const BinaryRBM& rbm);
  DeepBeliefNetwork(ParentalDensity p) : parent_(std::move(p)) {}

  ParentalDensity parent_;
  double sigma_ = 1.0;
  std::vector<double> shifts_;  // flattened, stride dim
  BinaryRBM rbm_;
  std::vector<double> unit_probs_;
  double deficiency_ = 0.0;
};

/// Couples a synthesized RBM with the mixture's kernels: component i sits at
/// the mixture's shift i, and the visible weight of e_i is the RBM's exact
/// first-layer marginal. Requires rbm dimensions (m, m+1) matching the
/// mixture.
DeepBeliefNetwork assemble(const MixtureModel& mixture, const BinaryRBM& rbm);

struct ApproximationCertificate {
  double q = 2.0;
  double measured_error = 0.0;   // ||f - p||_q over the working domain
  double paper_bound = 0.0;      // epsilon + 2 Upsilon_q sigma^{-d(1-1/q)} ||phi||_q / m^{1-1/min(q,2)}
  std::size_t m = 0;
  double sigma = 0.0;
  double smoothing_error = 0.0;  // ||f - f*phi_sigma||_q
  double mixture_error = 0.0;    // ||f*phi_sigma - mixture||_q
  double rbm_tv = 0.0;           // synthesis max deviation
  double deficiency = 0.0;
  // Triangle audit: measured <= smoothing + mixture + rbm_term + quad_margin.
  double rbm_term = 0.0;     // (sum_i |alpha_i - pi_i| + deficiency) * ||phi_{.,sigma}||_q
  double quad_margin = 0.0;  // 3x the summed quadrature error estimates
  bool triangle_holds = false;
};

struct PipelineResult {
  DeepBeliefNetwork dbn;
  ApproximationCertificate certificate;
};

/// Full certified pipeline for q in (1, inf): sigma from select_sigma at
/// epsilon/2, empirical mixture (optionally refined), RBM synthesized at
/// tolerance (epsilon/4) / (m sigma^{-d(1-1/q)} ||phi||_q), then assembly and
/// measurement of every certificate field over spec.domain. Stage failures
/// propagate as ConvergenceError.
PipelineResult approximate_lq(const TargetDensity& target, const ParentalDensity& parent,
                              double q, std::size_t m, double epsilon, std::uint64_t seed,
                              const QuadratureSpec& spec, bool greedy = true,
                              int greedy_iterations = 48);

/// Sup-norm pipeline: doubles m (cap m_cap, hard limit 64 from the synthesis
/// mask width), trying a short ladder of sigma candidates per m with sup-mode
/// greedy fitting aimed straight at the target, until ||f - p||_inf <= epsilon
/// on the spec grid. paper_bound is reported as epsilon itself: the sup-norm
/// statement carries no rate. ConvergenceError with the best error if the cap
/// is reached.
PipelineResult approximate_sup(const TargetDensity& target, const ParentalDensity& parent,
                               double epsilon, std::uint64_t seed, const QuadratureSpec& spec,
                               std::size_t m_cap = 1024, int greedy_iterations = 48);

struct KlCertificate {
  double kl = 0.0;
  double paper_bound = 0.0;  // (M / (eta m)) (8 ||phi||_2^2 + ||f - phi||_{L2(Omega)}^2)
  std::size_t m = 0;           // components actually used
  std::size_t m_requested = 0;
  std::size_t sup_floor_m = 0;  // M: first m whose sup stage reached eta/2
  double eta = 0.0;
  double sigma = 0.0;
  double min_density = 0.0;  // min of p over the Omega grid (certified >= eta/2)
  double l2_error = 0.0;     // ||f - p||_{L2(Omega)}
  bool bound_holds = false;
};

struct KlResult {
  DeepBeliefNetwork dbn;
  KlCertificate certificate;
};

/// KL pipeline on a compact box where both the target and the kernel sit
/// above eta (verified on the grid): M comes from the sup stage at tolerance
/// eta/2, the m-component model uses sigma = m^{-1/2} with an L2 greedy fit
/// toward the target plus a floor-repair pass, the grid floor p >= eta/2 is
/// certified (m doubles internally if it fails, up to m_cap), and KL(f||p)
/// over Omega is compared against the bound.
KlResult approximate_kl(const TargetDensity& target, const ParentalDensity& parent,
                        std::size_t m, const QuadratureSpec& spec, std::uint64_t seed,
                        std::size_t m_cap = 1024, int greedy_iterations = 48);

}  // namespace dbnapprox
