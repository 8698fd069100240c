#include "dbnapprox/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>

#include "dbnapprox/errors.hpp"
#include "dbnapprox/parallel.hpp"
#include "dbnapprox/summation.hpp"

namespace dbnapprox {

namespace {

int g_workers = 1;

constexpr double kDensityFloor = 1e-300;
constexpr std::size_t kChunk = 4096;

// Order-10 Gauss-Legendre nodes/weights on [-1,1], computed once by Newton
// iteration on the Legendre polynomial. Machine-precision accurate.
struct GaussPanel {
  std::array<double, 10> x{};
  std::array<double, 10> w{};
  GaussPanel() {
    const int n = 10;
    for (int i = 0; i < n; ++i) {
      // Chebyshev initial guess.
      double t = std::cos(3.14159265358979323846 * (i + 0.75) / (n + 0.5));
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = t;
        for (int k = 2; k <= n; ++k) {
          const double pk = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = pk;
        }
        const double dp = n * (t * p1 - p0) / (t * t - 1.0);
        const double step = p1 / dp;
        t -= step;
        if (std::abs(step) < 1e-16) break;
      }
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      const double dp = n * (t * p1 - p0) / (t * t - 1.0);
      x[static_cast<std::size_t>(i)] = t;
      w[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - t * t) * dp * dp);
    }
  }
};

const GaussPanel& gauss_panel() {
  static const GaussPanel p;
  return p;
}

}  // namespace

int worker_count() { return g_workers; }

void set_worker_count(int n) { g_workers = std::max(1, n); }

AxisRule axis_rule(QuadratureRule rule, double lo, double hi, int points) {
  if (points < 2) throw PreconditionError("quadrature: points_per_axis must be >= 2");
  if (!(lo < hi)) throw PreconditionError("quadrature: empty axis");
  AxisRule r;
  if (rule == QuadratureRule::midpoint) {
    const double h = (hi - lo) / points;
    r.nodes.resize(static_cast<std::size_t>(points));
    r.weights.assign(static_cast<std::size_t>(points), h);
    for (int i = 0; i < points; ++i)
      r.nodes[static_cast<std::size_t>(i)] = lo + (i + 0.5) * h;
  } else {
    const auto& p = gauss_panel();
    const int panels = (points + 9) / 10;
    const double h = (hi - lo) / panels;
    r.nodes.reserve(static_cast<std::size_t>(panels) * 10);
    r.weights.reserve(static_cast<std::size_t>(panels) * 10);
    for (int k = 0; k < panels; ++k) {
      const double a = lo + k * h;
      const double mid = a + 0.5 * h;
      for (int i = 0; i < 10; ++i) {
        r.nodes.push_back(mid + 0.5 * h * p.x[static_cast<std::size_t>(i)]);
        r.weights.push_back(0.5 * h * p.w[static_cast<std::size_t>(i)]);
      }
    }
  }
  return r;
}

TensorGrid::TensorGrid(const Box& box, QuadratureRule rule, int points_per_axis) {
  axes_.reserve(static_cast<std::size_t>(box.dim()));
  for (int i = 0; i < box.dim(); ++i) {
    axes_.push_back(axis_rule(rule, box.lo[static_cast<std::size_t>(i)],
                              box.hi[static_cast<std::size_t>(i)], points_per_axis));
    total_ *= axes_.back().nodes.size();
  }
}

double TensorGrid::node(std::size_t index, std::span<double> x) const {
  double w = 1.0;
  for (std::size_t a = axes_.size(); a-- > 0;) {
    const auto& ax = axes_[a];
    const std::size_t k = index % ax.nodes.size();
    index /= ax.nodes.size();
    x[a] = ax.nodes[k];
    w *= ax.weights[k];
  }
  return w;
}

namespace {

void check_budget(const QuadratureSpec& spec, int points) {
  const int d = spec.domain.dim();
  double total = 1.0;
  for (int i = 0; i < d; ++i) total *= points;
  if (total > static_cast<double>(spec.node_budget)) {
    std::ostringstream os;
    os << "quadrature node budget exceeded (" << points << "^" << d << " > " << spec.node_budget
       << "); reduce points_per_axis or use the monte_carlo estimator";
    throw ResourceError(os.str());
  }
}

// Integrates accumulate(f(x), g(x)) * weight over the grid with deterministic
// chunked pairwise summation. The per-node functor returns the integrand value.
template <class NodeFn>
double grid_sum(const Box& box, QuadratureRule rule, int points, NodeFn&& node_fn) {
  const TensorGrid grid(box, rule, points);
  const std::size_t chunks = (grid.size() + kChunk - 1) / kChunk;
  std::vector<double> partial(chunks, 0.0);
  std::atomic<bool> failed{false};
  std::mutex err_mutex;
  std::string err;
  for_chunks(grid.size(), kChunk, [&](std::size_t b, std::size_t e, std::size_t c) {
    if (failed.load(std::memory_order_relaxed)) return;
    try {
      PairwiseAccumulator acc;
      double x[8];
      const std::size_t d = static_cast<std::size_t>(grid.dim());
      for (std::size_t i = b; i < e; ++i) {
        const double w = grid.node(i, std::span<double>(x, d));
        acc.add(w * node_fn(std::span<const double>(x, d)));
      }
      partial[c] = acc.total();
    } catch (const std::exception& ex) {
      std::scoped_lock lock(err_mutex);
      failed.store(true);
      if (err.empty()) err = ex.what();
    }
  });
  if (failed.load()) throw PreconditionError("quadrature integrand failed: " + err);
  PairwiseAccumulator out;
  for (double p : partial) out.add(p);
  return out.total();
}

template <class NodeFn>
double grid_max(const Box& box, QuadratureRule rule, int points, NodeFn&& node_fn) {
  const TensorGrid grid(box, rule, points);
  const std::size_t chunks = (grid.size() + kChunk - 1) / kChunk;
  std::vector<double> partial(chunks, -std::numeric_limits<double>::infinity());
  for_chunks(grid.size(), kChunk, [&](std::size_t b, std::size_t e, std::size_t c) {
    double best = -std::numeric_limits<double>::infinity();
    double x[8];
    const std::size_t d = static_cast<std::size_t>(grid.dim());
    for (std::size_t i = b; i < e; ++i) {
      grid.node(i, std::span<double>(x, d));
      best = std::max(best, node_fn(std::span<const double>(x, d)));
    }
    partial[c] = best;
  });
  double best = -std::numeric_limits<double>::infinity();
  for (double p : partial) best = std::max(best, p);
  return best;
}

}  // namespace

DistanceReport lq_distance(const DensityFn& f, const DensityFn& g, double q,
                           const QuadratureSpec& spec) {
  if (std::isnan(q) || q < 1.0 || std::isinf(q))
    throw PreconditionError("lq_distance: q must lie in [1, inf); use sup_distance for q = inf");
  const Box box = spec.effective_domain();
  check_budget(spec, spec.points_per_axis);
  auto integrand = [&](std::span<const double> x) {
    const double d = std::abs(f(x) - g(x));
    return q == 2.0 ? d * d : (q == 1.0 ? d : std::pow(d, q));
  };
  const int coarse_points = std::max(2, spec.points_per_axis / 2);
  const double fine = grid_sum(box, spec.rule, spec.points_per_axis, integrand);
  const double coarse = grid_sum(box, spec.rule, coarse_points, integrand);
  const double vf = std::pow(std::max(0.0, fine), 1.0 / q);
  const double vc = std::pow(std::max(0.0, coarse), 1.0 / q);
  DistanceReport r;
  r.value = vf;
  r.estimator = Estimator::quadrature;
  r.error_estimate = std::abs(vf - vc) + 1e-15 * (1.0 + vf);
  double total = 1.0;
  for (int i = 0; i < box.dim(); ++i) total *= spec.points_per_axis;
  r.nodes_or_samples = static_cast<std::size_t>(total);
  return r;
}

DistanceReport sup_distance(const DensityFn& f, const DensityFn& g, const QuadratureSpec& spec) {
  const Box box = spec.effective_domain();
  check_budget(spec, 2 * spec.points_per_axis + 1);
  auto gap = [&](std::span<const double> x) { return std::abs(f(x) - g(x)); };
  // Midpoint-style refinement grids: nodes sit strictly inside the box and the
  // two levels never share a node, so jump locations on cell edges are skipped.
  const double coarse =
      grid_max(box, QuadratureRule::midpoint, spec.points_per_axis, gap);
  const double fine =
      grid_max(box, QuadratureRule::midpoint, 2 * spec.points_per_axis + 1, gap);
  DistanceReport r;
  r.value = std::max(fine, coarse);
  r.estimator = Estimator::quadrature;
  r.error_estimate = std::abs(fine - coarse) + 1e-15 * (1.0 + r.value);
  double total = 1.0;
  for (int i = 0; i < box.dim(); ++i) total *= 2 * spec.points_per_axis + 1;
  r.nodes_or_samples = static_cast<std::size_t>(total);
  return r;
}

namespace {

double kl_grid(const Box& box, QuadratureRule rule, int points, const DensityFn& f,
               const DensityFn& g, bool* infinite) {
  bool hit_support_violation = false;
  const double v = grid_sum(box, rule, points, [&](std::span<const double> x) {
    const double fv = f(x);
    if (fv <= kDensityFloor) return 0.0;  // x log x -> 0 convention
    const double gv = g(x);
    if (gv <= kDensityFloor) {
      hit_support_violation = true;
      return 0.0;
    }
    return fv * std::log(fv / gv);
  });
  *infinite = hit_support_violation;
  return v;
}

}  // namespace

DistanceReport kl_divergence(const DensityFn& f, const DensityFn& g, const QuadratureSpec& spec) {
  const Box box = spec.effective_domain();
  check_budget(spec, spec.points_per_axis);
  bool inf_fine = false, inf_coarse = false;
  const double fine = kl_grid(box, spec.rule, spec.points_per_axis, f, g, &inf_fine);
  const double coarse = kl_grid(box, spec.rule, std::max(2, spec.points_per_axis / 2), f, g,
                                &inf_coarse);
  DistanceReport r;
  r.estimator = Estimator::quadrature;
  double total = 1.0;
  for (int i = 0; i < box.dim(); ++i) total *= spec.points_per_axis;
  r.nodes_or_samples = static_cast<std::size_t>(total);
  if (inf_fine || inf_coarse) {
    r.value = std::numeric_limits<double>::infinity();
    r.error_estimate = std::numeric_limits<double>::infinity();
    return r;
  }
  r.value = fine;
  r.error_estimate = std::abs(fine - coarse) + 1e-15 * (1.0 + std::abs(fine));
  return r;
}

KlBoundCheck kl_l2_bound_check(const DensityFn& f, const DensityFn& g, double eta,
                               const QuadratureSpec& spec) {
  if (!(eta > 0.0)) throw PreconditionError("kl_l2_bound_check: eta must be positive");
  const Box box = spec.effective_domain();
  const TensorGrid grid(box, spec.rule, spec.points_per_axis);
  double x[8];
  const std::size_t d = static_cast<std::size_t>(grid.dim());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    grid.node(i, std::span<double>(x, d));
    const std::span<const double> xs(x, d);
    const double fv = f(xs), gv = g(xs);
    if (fv < eta || gv < eta) {
      std::ostringstream os;
      os << "kl_l2_bound_check: density below eta=" << eta << " at node (";
      for (std::size_t k = 0; k < d; ++k) os << (k ? "," : "") << x[k];
      os << "): f=" << fv << " g=" << gv;
      throw PreconditionError(os.str());
    }
  }
  const DistanceReport kl = kl_divergence(f, g, spec);
  const DistanceReport l2 = lq_distance(f, g, 2.0, spec);
  KlBoundCheck c;
  c.kl = kl.value;
  c.l2 = l2.value;
  c.bound = l2.value * l2.value / eta;
  c.margin = kl.error_estimate +
             (2.0 * l2.value * l2.error_estimate + l2.error_estimate * l2.error_estimate) / eta +
             1e-12;
  c.holds = kl.value <= c.bound + c.margin;
  return c;
}

DistanceReport lq_distance_monte_carlo(
    const DensityFn& f,
    const std::function<std::vector<double>(std::uint64_t, std::size_t)>& f_sampler,
    const DensityFn& g, double q, int dim, std::size_t samples, std::uint64_t seed) {
  if (std::isnan(q) || q < 1.0 || std::isinf(q))
    throw PreconditionError("lq_distance_monte_carlo: q must lie in [1, inf)");
  if (samples < 2) throw PreconditionError("lq_distance_monte_carlo: need at least 2 samples");
  const std::vector<double> pts = f_sampler(seed, samples);
  if (pts.size() != samples * static_cast<std::size_t>(dim))
    throw PreconditionError("lq_distance_monte_carlo: sampler returned wrong length");
  PairwiseAccumulator acc, acc2;
  for (std::size_t k = 0; k < samples; ++k) {
    const std::span<const double> x(pts.data() + k * static_cast<std::size_t>(dim),
                                    static_cast<std::size_t>(dim));
    const double fv = f(x);
    if (fv <= kDensityFloor) continue;  // zero-density draw carries no weight
    const double term = std::pow(std::abs(fv - g(x)), q) / fv;
    acc.add(term);
    acc2.add(term * term);
  }
  const double n = static_cast<double>(samples);
  const double mean = acc.total() / n;
  const double var = std::max(0.0, acc2.total() / n - mean * mean);
  const double se_mean = std::sqrt(var / n);
  DistanceReport r;
  r.value = std::pow(std::max(0.0, mean), 1.0 / q);
  r.estimator = Estimator::monte_carlo;
  // Delta method: d/dm m^{1/q} = m^{1/q-1}/q.
  r.error_estimate =
      mean > 0.0 ? std::pow(mean, 1.0 / q - 1.0) / q * se_mean : se_mean;
  r.nodes_or_samples = samples;
  return r;
}

DistanceReport integrate(const DensityFn& f, const QuadratureSpec& spec) {
  const Box box = spec.effective_domain();
  check_budget(spec, spec.points_per_axis);
  auto ident = [&](std::span<const double> x) { return f(x); };
  const double fine = grid_sum(box, spec.rule, spec.points_per_axis, ident);
  const double coarse = grid_sum(box, spec.rule, std::max(2, spec.points_per_axis / 2), ident);
  DistanceReport r;
  r.value = fine;
  r.estimator = Estimator::quadrature;
  r.error_estimate = std::abs(fine - coarse) + 1e-15 * (1.0 + std::abs(fine));
  double total = 1.0;
  for (int i = 0; i < box.dim(); ++i) total *= spec.points_per_axis;
  r.nodes_or_samples = static_cast<std::size_t>(total);
  return r;
}

}  // namespace dbnapprox
