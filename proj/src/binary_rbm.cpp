#include "dbnapprox/binary_rbm.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <sstream>

#include "dbnapprox/errors.hpp"
#include "dbnapprox/parallel.hpp"
#include "dbnapprox/rng.hpp"
#include "dbnapprox/summation.hpp"
#include "dbnapprox/textio.hpp"

namespace dbnapprox {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double lse2(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b), lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

// a_j = (W^T v)_j + c_j for every hidden unit.
void hidden_field(const BinaryRBM& rbm, std::uint64_t v, std::span<double> a) {
  const std::size_t n = static_cast<std::size_t>(rbm.hidden_count);
  for (std::size_t j = 0; j < n; ++j) a[j] = rbm.hidden_bias[j];
  std::uint64_t bits = v;
  while (bits != 0) {
    const int i = std::countr_zero(bits);
    bits &= bits - 1;
    const double* row = rbm.weights.data() + static_cast<std::size_t>(i) * n;
    for (std::size_t j = 0; j < n; ++j) a[j] += row[j];
  }
}

// log sum_h exp(-E(v,h)) = -<v,b> + sum_j softplus(-a_j).
double log_ptilde(const BinaryRBM& rbm, std::uint64_t v, std::span<double> scratch) {
  hidden_field(rbm, v, scratch);
  double lp = 0.0;
  std::uint64_t bits = v;
  while (bits != 0) {
    const int i = std::countr_zero(bits);
    bits &= bits - 1;
    lp -= rbm.visible_bias[static_cast<std::size_t>(i)];
  }
  for (std::size_t j = 0; j < scratch.size(); ++j) lp += softplus(-scratch[j]);
  return lp;
}

std::vector<double> all_log_ptilde(const BinaryRBM& rbm) {
  const std::size_t count = std::size_t{1} << rbm.visible_count;
  std::vector<double> lp(count);
  for_chunks(count, 4096, [&](std::size_t b, std::size_t e, std::size_t) {
    std::vector<double> scratch(static_cast<std::size_t>(rbm.hidden_count));
    for (std::size_t v = b; v < e; ++v)
      lp[v] = log_ptilde(rbm, v, std::span<double>(scratch));
  });
  return lp;
}

double logsumexp(const std::vector<double>& lp) {
  double peak = kNegInf;
  for (double x : lp) peak = std::max(peak, x);
  const std::size_t chunks = (lp.size() + 4095) / 4096;
  std::vector<double> partial(chunks, 0.0);
  for_chunks(lp.size(), 4096, [&](std::size_t b, std::size_t e, std::size_t c) {
    PairwiseAccumulator acc;
    for (std::size_t v = b; v < e; ++v) acc.add(std::exp(lp[v] - peak));
    partial[c] = acc.total();
  });
  PairwiseAccumulator total;
  for (double p : partial) total.add(p);
  return peak + std::log(total.total());
}

void check_enumeration_cap(const BinaryRBM& rbm, int cap) {
  if (rbm.visible_count + rbm.hidden_count > cap) {
    std::ostringstream os;
    os << "enumeration cap exceeded: visible+hidden = "
       << rbm.visible_count + rbm.hidden_count << " > " << cap;
    throw ResourceError(os.str());
  }
}

UnitMarginals enumeration_unit_marginals(const BinaryRBM& rbm) {
  const std::vector<double> lp = all_log_ptilde(rbm);
  const double log_z = logsumexp(lp);
  const std::size_t m = static_cast<std::size_t>(rbm.visible_count);

  UnitMarginals um;
  um.log_z = log_z;
  um.unit_probs.resize(m);
  for (std::size_t i = 0; i < m; ++i)
    um.unit_probs[i] = std::exp(lp[std::size_t{1} << i] - log_z);

  // The leftover mass is summed directly over non-unit states so it never
  // suffers 1 - sum cancellation.
  double peak = kNegInf;
  for (std::size_t v = 0; v < lp.size(); ++v)
    if (!std::has_single_bit(v)) peak = std::max(peak, lp[v]);
  PairwiseAccumulator acc;
  for (std::size_t v = 0; v < lp.size(); ++v)
    if (!std::has_single_bit(v)) acc.add(std::exp(lp[v] - peak));
  um.deficiency = std::exp(peak + std::log(acc.total()) - log_z);
  um.max_non_unit = std::exp(peak - log_z);
  return um;
}

// Synthesis template layout (hidden unit j < m watches e_j, unit m is free):
//   W[i][j] = -3w if i == j else 3w,  W[.][m] = 0
//   b = w * ones,  c_j = w - log(alpha_j)  (disabled: 6w + 800),  c_m = 0
BinaryRBM template_rbm(std::span<const double> alpha, double w) {
  const int m = static_cast<int>(alpha.size());
  const int n = m + 1;
  BinaryRBM rbm;
  rbm.visible_count = m;
  rbm.hidden_count = n;
  rbm.weights.assign(static_cast<std::size_t>(m) * static_cast<std::size_t>(n), 0.0);
  rbm.visible_bias.assign(static_cast<std::size_t>(m), w);
  rbm.hidden_bias.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      rbm.weights[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) +
                  static_cast<std::size_t>(j)] = i == j ? -3.0 * w : 3.0 * w;
  for (int j = 0; j < m; ++j)
    rbm.hidden_bias[static_cast<std::size_t>(j)] =
        alpha[static_cast<std::size_t>(j)] > 0.0
            ? w - std::log(alpha[static_cast<std::size_t>(j)])
            : 6.0 * w + 800.0;
  return rbm;
}

// Exact structural match against template_rbm's layout. Values are compared
// bitwise: detection targets RBMs this library synthesized (including ones
// round-tripped through the text format, which is exact).
bool matches_template(const BinaryRBM& rbm, double* w_out) {
  const int m = rbm.visible_count, n = rbm.hidden_count;
  if (n != m + 1 || m < 1) return false;
  const double w = rbm.visible_bias[0];
  if (!(w > 0.0)) return false;
  for (double b : rbm.visible_bias)
    if (b != w) return false;
  if (rbm.hidden_bias[static_cast<std::size_t>(m)] != 0.0) return false;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      const double expect = i == j ? -3.0 * w : 3.0 * w;
      if (rbm.weight(i, j) != expect) return false;
    }
    if (rbm.weight(i, m) != 0.0) return false;
  }
  *w_out = w;
  return true;
}

// Unit marginals, deficiency, and the largest off-support atom for a template
// RBM, all exact. Grouping states by popcount s makes every factor depend on
// s alone, so the sum over |S| = s subsets is an elementary symmetric
// polynomial, evaluated by the usual one-pass recurrence in log space.
UnitMarginals template_unit_marginals(const BinaryRBM& rbm, double w) {
  const std::size_t m = static_cast<std::size_t>(rbm.visible_count);
  std::vector<double> ctil(m);
  for (std::size_t j = 0; j < m; ++j) ctil[j] = -rbm.hidden_bias[j];

  std::vector<double> log_level(m + 1, kNegInf);  // total mass per popcount
  std::vector<double> log_peak(m + 1, kNegInf);   // largest single state per popcount
  std::vector<double> unit_lp(m, kNegInf);

  std::vector<double> lt(m), la(m), lb(m), sorted(m), level(m + 1);
  for (std::size_t s = 0; s <= m; ++s) {
    const double sd = static_cast<double>(s);
    double sum_b = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      la[j] = -w + softplus(3.0 * w * (2.0 - sd) + ctil[j]);
      lb[j] = softplus(-3.0 * w * sd + ctil[j]);
      lt[j] = la[j] - lb[j];
      sum_b += lb[j];
    }
    const double base = std::log(2.0) + sum_b;  // the free hidden unit doubles everything

    std::fill(level.begin(), level.begin() + static_cast<std::ptrdiff_t>(s) + 1, kNegInf);
    level[0] = 0.0;
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t k = std::min(j + 1, s); k >= 1; --k)
        level[k] = lse2(level[k], level[k - 1] + lt[j]);
    log_level[s] = base + level[s];

    sorted.assign(lt.begin(), lt.end());
    std::sort(sorted.begin(), sorted.end(), std::greater<double>());
    double top = 0.0;
    for (std::size_t k = 0; k < s; ++k) top += sorted[k];
    log_peak[s] = base + top;

    if (s == 1)
      for (std::size_t i = 0; i < m; ++i) unit_lp[i] = base + lt[i];
  }

  double log_z = kNegInf;
  for (double x : log_level) log_z = lse2(log_z, x);

  UnitMarginals um;
  um.log_z = log_z;
  um.unit_probs.resize(m);
  for (std::size_t i = 0; i < m; ++i) um.unit_probs[i] = std::exp(unit_lp[i] - log_z);
  double off = kNegInf, off_peak = kNegInf;
  for (std::size_t s = 0; s <= m; ++s) {
    if (s == 1) continue;
    off = lse2(off, log_level[s]);
    off_peak = std::max(off_peak, log_peak[s]);
  }
  um.deficiency = std::exp(off - log_z);
  um.max_non_unit = std::exp(off_peak - log_z);
  return um;
}

double max_deviation(const DiscreteDistribution& target, const UnitMarginals& um) {
  double dev = um.max_non_unit;  // target is zero off the unit vectors
  for (std::size_t i = 0; i < um.unit_probs.size(); ++i)
    dev = std::max(dev, std::abs(target.prob(std::uint64_t{1} << i) - um.unit_probs[i]));
  return dev;
}

std::vector<double> unit_masses(const DiscreteDistribution& target) {
  std::vector<double> alpha(static_cast<std::size_t>(target.dim), 0.0);
  for (const auto& [mask, p] : target.probabilities) {
    if (!std::has_single_bit(mask))
      throw PreconditionError("synthesize: target mass off the unit vectors");
    alpha[static_cast<std::size_t>(std::countr_zero(mask))] = p;
  }
  return alpha;
}

}  // namespace

void BinaryRBM::validate() const {
  if (visible_count < 1 || hidden_count < 1)
    throw PreconditionError("BinaryRBM: unit counts must be positive");
  if (visible_count > 64 || hidden_count > 65)
    throw PreconditionError("BinaryRBM: layer sizes beyond 64 visible / 65 hidden are unsupported");
  const std::size_t m = static_cast<std::size_t>(visible_count);
  const std::size_t n = static_cast<std::size_t>(hidden_count);
  if (weights.size() != m * n || visible_bias.size() != m || hidden_bias.size() != n)
    throw PreconditionError("BinaryRBM: parameter sizes disagree with unit counts");
  for (double x : weights)
    if (!std::isfinite(x)) throw PreconditionError("BinaryRBM: non-finite weight");
  for (double x : visible_bias)
    if (!std::isfinite(x)) throw PreconditionError("BinaryRBM: non-finite visible bias");
  for (double x : hidden_bias)
    if (!std::isfinite(x)) throw PreconditionError("BinaryRBM: non-finite hidden bias");
}

std::string BinaryRBM::serialize() const {
  validate();
  std::ostringstream os;
  os << "binary_rbm " << visible_count << ' ' << hidden_count << '\n';
  for (int i = 0; i < visible_count; ++i) {
    for (int j = 0; j < hidden_count; ++j) {
      if (j) os << ' ';
      os << format_double(weight(i, j));
    }
    os << '\n';
  }
  for (int i = 0; i < visible_count; ++i)
    os << (i ? " " : "") << format_double(visible_bias[static_cast<std::size_t>(i)]);
  os << '\n';
  for (int j = 0; j < hidden_count; ++j)
    os << (j ? " " : "") << format_double(hidden_bias[static_cast<std::size_t>(j)]);
  os << '\n';
  return os.str();
}

BinaryRBM BinaryRBM::parse(const std::string& text) {
  std::istringstream is(text);
  std::string tag;
  is >> tag;
  if (tag != "binary_rbm") throw PreconditionError("BinaryRBM::parse: missing binary_rbm header");
  std::string ms, ns;
  if (!(is >> ms >> ns)) throw PreconditionError("BinaryRBM::parse: truncated header");
  BinaryRBM rbm;
  rbm.visible_count = static_cast<int>(parse_int(ms));
  rbm.hidden_count = static_cast<int>(parse_int(ns));
  if (rbm.visible_count < 1 || rbm.hidden_count < 1)
    throw PreconditionError("BinaryRBM::parse: bad unit counts");
  const std::size_t m = static_cast<std::size_t>(rbm.visible_count);
  const std::size_t n = static_cast<std::size_t>(rbm.hidden_count);
  const std::size_t need = m * n + m + n;
  std::vector<double> vals;
  vals.reserve(need);
  std::string tok;
  while (vals.size() < need && is >> tok) vals.push_back(parse_double(tok));
  if (vals.size() != need) throw PreconditionError("BinaryRBM::parse: truncated parameter list");
  if (is >> tok) throw PreconditionError("BinaryRBM::parse: trailing content");
  rbm.weights.assign(vals.begin(), vals.begin() + static_cast<std::ptrdiff_t>(m * n));
  rbm.visible_bias.assign(vals.begin() + static_cast<std::ptrdiff_t>(m * n),
                          vals.begin() + static_cast<std::ptrdiff_t>(m * n + m));
  rbm.hidden_bias.assign(vals.begin() + static_cast<std::ptrdiff_t>(m * n + m), vals.end());
  rbm.validate();
  return rbm;
}

double energy(const BinaryRBM& rbm, std::span<const int> v, std::span<const int> h) {
  rbm.validate();
  if (v.size() != static_cast<std::size_t>(rbm.visible_count) ||
      h.size() != static_cast<std::size_t>(rbm.hidden_count))
    throw PreconditionError("energy: state lengths disagree with unit counts");
  for (const int x : v)
    if (x != 0 && x != 1) throw PreconditionError("energy: visible states must be 0/1");
  for (const int x : h)
    if (x != 0 && x != 1) throw PreconditionError("energy: hidden states must be 0/1");
  const std::size_t n = h.size();
  double e = 0.0;
  for (std::size_t j = 0; j < n; ++j)
    if (h[j]) e += rbm.hidden_bias[j];
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i]) continue;
    e += rbm.visible_bias[i];
    const double* row = rbm.weights.data() + i * n;
    for (std::size_t j = 0; j < n; ++j)
      if (h[j]) e += row[j];
  }
  return e;
}

double energy_bits(const BinaryRBM& rbm, std::uint64_t v, std::uint64_t h) {
  const std::size_t n = static_cast<std::size_t>(rbm.hidden_count);
  double e = 0.0;
  std::uint64_t hb = h;
  while (hb != 0) {
    const int j = std::countr_zero(hb);
    hb &= hb - 1;
    e += rbm.hidden_bias[static_cast<std::size_t>(j)];
  }
  std::uint64_t vb = v;
  while (vb != 0) {
    const int i = std::countr_zero(vb);
    vb &= vb - 1;
    e += rbm.visible_bias[static_cast<std::size_t>(i)];
    const double* row = rbm.weights.data() + static_cast<std::size_t>(i) * n;
    std::uint64_t hh = h;
    while (hh != 0) {
      const int j = std::countr_zero(hh);
      hh &= hh - 1;
      e += row[j];
    }
  }
  return e;
}

DiscreteDistribution DiscreteDistribution::on_unit_vectors(std::span<const double> alpha) {
  if (alpha.empty() || alpha.size() > 64)
    throw PreconditionError("on_unit_vectors: need 1..64 masses");
  DiscreteDistribution d;
  d.dim = static_cast<int>(alpha.size());
  for (std::size_t i = 0; i < alpha.size(); ++i)
    if (alpha[i] != 0.0) d.probabilities.emplace(std::uint64_t{1} << i, alpha[i]);
  d.validate();
  return d;
}

double DiscreteDistribution::prob(std::uint64_t mask) const {
  const auto it = probabilities.find(mask);
  return it == probabilities.end() ? 0.0 : it->second;
}

std::size_t DiscreteDistribution::support_size() const {
  std::size_t s = 0;
  for (const auto& [mask, p] : probabilities)
    if (p > 0.0) ++s;
  return s;
}

void DiscreteDistribution::validate() const {
  if (dim < 1 || dim > 64) throw PreconditionError("DiscreteDistribution: dim must be 1..64");
  double total = 0.0;
  for (const auto& [mask, p] : probabilities) {
    if (dim < 64 && mask >= (std::uint64_t{1} << dim))
      throw PreconditionError("DiscreteDistribution: state outside {0,1}^dim");
    if (!(p >= 0.0) || !std::isfinite(p))
      throw PreconditionError("DiscreteDistribution: probabilities must be finite and >= 0");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw PreconditionError("DiscreteDistribution: total mass must be 1 within 1e-12");
}

PartitionReport partition_and_marginals(const BinaryRBM& rbm, int enumeration_cap,
                                        int joint_cap) {
  rbm.validate();
  check_enumeration_cap(rbm, enumeration_cap);
  const std::vector<double> lp = all_log_ptilde(rbm);
  PartitionReport report;
  report.log_z = logsumexp(lp);
  report.z = std::exp(report.log_z);
  for (std::size_t v = 0; v < lp.size(); ++v)
    report.visible_marginal.emplace_hint(report.visible_marginal.end(), v,
                                         std::exp(lp[v] - report.log_z));
  if (rbm.visible_count + rbm.hidden_count <= joint_cap) {
    const std::size_t n = static_cast<std::size_t>(rbm.hidden_count);
    std::vector<double> a(n);
    for (std::size_t v = 0; v < lp.size(); ++v) {
      hidden_field(rbm, v, std::span<double>(a));
      double bv = 0.0;
      std::uint64_t bits = v;
      while (bits != 0) {
        const int i = std::countr_zero(bits);
        bits &= bits - 1;
        bv += rbm.visible_bias[static_cast<std::size_t>(i)];
      }
      for (std::uint64_t h = 0; h < (std::uint64_t{1} << n); ++h) {
        double e = bv;
        std::uint64_t hb = h;
        while (hb != 0) {
          const int j = std::countr_zero(hb);
          hb &= hb - 1;
          e += a[static_cast<std::size_t>(j)];
        }
        report.joint.emplace_hint(report.joint.end(), (v << n) | h,
                                  std::exp(-e - report.log_z));
      }
    }
    report.joint_materialized = true;
  }
  return report;
}

UnitMarginals unit_vector_marginals(const BinaryRBM& rbm, int enumeration_cap) {
  rbm.validate();
  if (rbm.visible_count + rbm.hidden_count <= enumeration_cap)
    return enumeration_unit_marginals(rbm);
  double w = 0.0;
  if (matches_template(rbm, &w)) return template_unit_marginals(rbm, w);
  throw ResourceError(
      "unit_vector_marginals: model exceeds the enumeration cap and does not follow the "
      "synthesis template");
}

SynthesisReport synthesize_with_report(const DiscreteDistribution& target, double epsilon) {
  target.validate();
  if (!(epsilon > 0.0)) throw PreconditionError("synthesize: epsilon must be positive");
  const std::vector<double> alpha = unit_masses(target);
  const int m = target.dim;
  const bool in_cap = 2 * m + 1 <= 24;

  double best_dev = std::numeric_limits<double>::infinity();
  SynthesisReport best;
  for (double w = 4.0; w <= 4096.0; w *= 2.0) {
    BinaryRBM rbm = template_rbm(alpha, w);
    UnitMarginals um = in_cap ? enumeration_unit_marginals(rbm) : template_unit_marginals(rbm, w);
    const double dev = max_deviation(target, um);
    if (dev < best_dev) {
      best_dev = dev;
      best = SynthesisReport{std::move(rbm), dev, w, false, std::move(um)};
    }
    if (best_dev <= epsilon) return best;
  }
  if (in_cap) {
    SynthesisReport refined = refine_marginal_kl(best.rbm, target, epsilon, 500);
    refined.sharpness = best.sharpness;
    if (refined.achieved_deviation <= epsilon) return refined;
    if (refined.achieved_deviation < best_dev) best_dev = refined.achieved_deviation;
  }
  std::ostringstream os;
  os << "synthesize: sharpness schedule exhausted; best deviation " << best_dev
     << " > epsilon " << epsilon;
  throw ConvergenceError(os.str(), best_dev);
}

BinaryRBM synthesize(const DiscreteDistribution& target, double epsilon) {
  return synthesize_with_report(target, epsilon).rbm;
}

SynthesisReport refine_marginal_kl(const BinaryRBM& start, const DiscreteDistribution& target,
                                   double epsilon, int max_iterations) {
  start.validate();
  target.validate();
  check_enumeration_cap(start, 24);
  if (target.dim != start.visible_count)
    throw PreconditionError("refine_marginal_kl: target dimension disagrees with the model");

  const std::size_t m = static_cast<std::size_t>(start.visible_count);
  const std::size_t n = static_cast<std::size_t>(start.hidden_count);

  struct Eval {
    double kl = 0.0;
    double dev = 0.0;
    UnitMarginals um;
  };
  auto evaluate = [&](const BinaryRBM& rbm) {
    Eval ev;
    ev.um = enumeration_unit_marginals(rbm);
    ev.dev = max_deviation(target, ev.um);
    const std::vector<double> lp = all_log_ptilde(rbm);
    const double log_z = logsumexp(lp);
    double kl = 0.0;
    for (const auto& [mask, p] : target.probabilities)
      if (p > 0.0) kl += p * (std::log(p) - (lp[mask] - log_z));
    ev.kl = kl;
    return ev;
  };

  BinaryRBM cur = start;
  Eval ev = evaluate(cur);
  double step = 1.0;
  for (int it = 0; it < max_iterations && ev.dev > epsilon; ++it) {
    // Exact KL gradient: E_target[dE] - E_model[dE] with the hidden layer
    // integrated out through its conditional means.
    std::vector<double> gw(m * n, 0.0), gb(m, 0.0), gc(n, 0.0);
    std::vector<double> a(n), sig(n);
    for (const auto& [mask, p] : target.probabilities) {
      if (p <= 0.0) continue;
      hidden_field(cur, mask, std::span<double>(a));
      for (std::size_t j = 0; j < n; ++j) sig[j] = sigmoid(-a[j]);
      for (std::size_t j = 0; j < n; ++j) gc[j] += p * sig[j];
      std::uint64_t bits = mask;
      while (bits != 0) {
        const std::size_t i = static_cast<std::size_t>(std::countr_zero(bits));
        bits &= bits - 1;
        gb[i] += p;
        for (std::size_t j = 0; j < n; ++j) gw[i * n + j] += p * sig[j];
      }
    }
    const std::vector<double> lp = all_log_ptilde(cur);
    const double log_z = logsumexp(lp);
    for (std::size_t v = 0; v < lp.size(); ++v) {
      const double p = std::exp(lp[v] - log_z);
      hidden_field(cur, v, std::span<double>(a));
      for (std::size_t j = 0; j < n; ++j) sig[j] = sigmoid(-a[j]);
      for (std::size_t j = 0; j < n; ++j) gc[j] -= p * sig[j];
      std::uint64_t bits = v;
      while (bits != 0) {
        const std::size_t i = static_cast<std::size_t>(std::countr_zero(bits));
        bits &= bits - 1;
        gb[i] -= p;
        for (std::size_t j = 0; j < n; ++j) gw[i * n + j] -= p * sig[j];
      }
    }

    bool accepted = false;
    while (step > 1e-12) {
      BinaryRBM trial = cur;
      for (std::size_t k = 0; k < m * n; ++k) trial.weights[k] -= step * gw[k];
      for (std::size_t i = 0; i < m; ++i) trial.visible_bias[i] -= step * gb[i];
      for (std::size_t j = 0; j < n; ++j) trial.hidden_bias[j] -= step * gc[j];
      const Eval trial_ev = evaluate(trial);
      if (trial_ev.kl < ev.kl - 1e-15) {
        cur = std::move(trial);
        ev = trial_ev;
        step *= 1.2;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
  }
  return SynthesisReport{std::move(cur), ev.dev, 0.0, true, std::move(ev.um)};
}

std::vector<std::pair<std::uint64_t, std::uint64_t>> sample_hidden_pair(const BinaryRBM& rbm,
                                                                        std::uint64_t seed,
                                                                        std::size_t count) {
  rbm.validate();
  check_enumeration_cap(rbm, 24);
  const std::vector<double> lp = all_log_ptilde(rbm);
  const double log_z = logsumexp(lp);
  std::vector<double> cdf(lp.size());
  double running = 0.0;
  for (std::size_t v = 0; v < lp.size(); ++v) {
    running += std::exp(lp[v] - log_z);
    cdf[v] = running;
  }
  cdf.back() = std::max(cdf.back(), 1.0);

  const std::size_t n = static_cast<std::size_t>(rbm.hidden_count);
  std::vector<double> a(n);
  std::vector<std::pair<std::uint64_t, std::uint64_t>> out;
  out.reserve(count);
  Rng rng(seed);
  for (std::size_t k = 0; k < count; ++k) {
    const double u = rng.uniform01();
    const std::uint64_t v = static_cast<std::uint64_t>(
        std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    hidden_field(rbm, v, std::span<double>(a));
    std::uint64_t h = 0;
    for (std::size_t j = 0; j < n; ++j)
      if (rng.uniform01() < sigmoid(-a[j])) h |= std::uint64_t{1} << j;
    out.emplace_back(v, h);
  }
  return out;
}

}  // namespace dbnapprox
