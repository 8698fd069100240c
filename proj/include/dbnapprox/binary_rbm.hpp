#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace dbnapprox {

/// Restricted Boltzmann machine on binary units with energy
/// E(v,h) = <v,Wh> + <v,b> + <h,c> and law pi(v,h) = exp(-E(v,h)) / Z.
/// Bit i of a state mask is unit i. Immutable by convention once built.
struct BinaryRBM {
  int visible_count = 0;
  int hidden_count = 0;
  std::vector<double> weights;       // row-major, visible_count x hidden_count
  std::vector<double> visible_bias;  // length visible_count
  std::vector<double> hidden_bias;   // length hidden_count

  double weight(int i, int j) const {
    return weights[static_cast<std::size_t>(i) * static_cast<std::size_t>(hidden_count) +
                   static_cast<std::size_t>(j)];
  }

  /// Checks sizes and finiteness; throws PreconditionError.
  void validate() const;

  /// Flat text form: a dimensions line, one line per weight row, then the two
  /// bias lines. Shortest round-trip decimals, so parse(serialize()) is
  /// bit-exact.
  std::string serialize() const;
  static BinaryRBM parse(const std::string& text);
};

/// E(v,h) with v, h given as 0/1 vectors. Length mismatches throw.
double energy(const BinaryRBM& rbm, std::span<const int> v, std::span<const int> h);
/// Same with states packed as bitmasks.
double energy_bits(const BinaryRBM& rbm, std::uint64_t v, std::uint64_t h);

/// Probability mass function on {0,1}^dim, keyed by state bitmask. Absent
/// keys carry zero mass.
struct DiscreteDistribution {
  int dim = 0;
  std::map<std::uint64_t, double> probabilities;

  /// Distribution on the unit vectors: alpha[i] is the mass of e_i (bit i).
  static DiscreteDistribution on_unit_vectors(std::span<const double> alpha);

  double prob(std::uint64_t mask) const;
  std::size_t support_size() const;
  /// Nonnegative, total mass 1 within 1e-12, keys inside {0,1}^dim.
  void validate() const;
};

/// Exact enumeration results. Probabilities are computed in log space and
/// exponentiated after log-sum-exp normalization. The joint table is only
/// materialized when visible_count + hidden_count <= joint_cap (default 20);
/// the partition function and visible marginal use the analytic sum over each
/// v's hidden configurations, so they need 2^visible_count work regardless.
struct PartitionReport {
  double log_z = 0.0;
  double z = 0.0;
  std::map<std::uint64_t, double> visible_marginal;  // key: v mask
  std::map<std::uint64_t, double> joint;             // key: (v << hidden_count) | h
  bool joint_materialized = false;
};

PartitionReport partition_and_marginals(const BinaryRBM& rbm, int enumeration_cap = 24,
                                        int joint_cap = 20);

/// First-layer mass on the unit vectors plus what is left over. Exact: by
/// enumeration within the cap, and by an elementary-symmetric-polynomial
/// recursion in log space for RBMs following the synthesis template (which is
/// how the pipeline certifies models too large to enumerate).
struct UnitMarginals {
  std::vector<double> unit_probs;  // pi_1(e_i), i = 0..visible_count-1
  double deficiency = 0.0;         // 1 - sum_i pi_1(e_i)
  double max_non_unit = 0.0;       // largest pi_1(v) over non-unit v
  double log_z = 0.0;
};

UnitMarginals unit_vector_marginals(const BinaryRBM& rbm, int enumeration_cap = 24);

struct SynthesisReport {
  BinaryRBM rbm;
  double achieved_deviation = 0.0;  // max_v |target(v) - pi_1(v)|
  double sharpness = 0.0;           // final template parameter w
  bool used_descent = false;        // analytic stage failed, descent finished
  UnitMarginals marginals;
};

/// Builds an RBM with hidden_count = visible_count + 1 whose first-layer
/// marginal matches `target` (supported on unit vectors) to within epsilon in
/// the max-deviation sense, verified exactly before returning. Stage one
/// assigns hidden unit i to e_i with weight column w(2e_i - 1) scaled by 3 and
/// bias w - log alpha_i, sharpening w along {4, 8, ..., 4096}; if the check
/// still fails inside the enumeration cap, exact-gradient descent on
/// KL(target || marginal) finishes the job. Throws ConvergenceError with the
/// best deviation when every stage fails.
SynthesisReport synthesize_with_report(const DiscreteDistribution& target, double epsilon);
BinaryRBM synthesize(const DiscreteDistribution& target, double epsilon);

/// The descent stage on its own: exact enumeration gradients of
/// KL(target || marginal) with halving line search, stopping as soon as the
/// max deviation reaches epsilon. Enumeration cap applies.
SynthesisReport refine_marginal_kl(const BinaryRBM& start, const DiscreteDistribution& target,
                                   double epsilon, int max_iterations);

/// count i.i.d. exact draws (v, h) from the joint, as bitmask pairs: inverse
/// CDF over the visible marginal, then each hidden unit is an independent
/// Bernoulli given v. In the DBN these layers are (h1, h2).
std::vector<std::pair<std::uint64_t, std::uint64_t>> sample_hidden_pair(const BinaryRBM& rbm,
                                                                        std::uint64_t seed,
                                                                        std::size_t count);

}  // namespace dbnapprox
