#include "dbnapprox/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "dbnapprox/errors.hpp"
#include "dbnapprox/parallel.hpp"
#include "dbnapprox/rng.hpp"
#include "dbnapprox/summation.hpp"

namespace dbnapprox {

namespace {

double scaled_kernel_at(const ParentalDensity& parent, double sigma, int dim,
                        const double* shift, const double* x) {
  double local[8];
  for (int k = 0; k < dim; ++k)
    local[static_cast<std::size_t>(k)] = (x[k] - shift[k]) / sigma;
  return parent(std::span<const double>(local, static_cast<std::size_t>(dim))) *
         std::pow(sigma, -dim);
}

// Fixed evaluation grid the refinement loop scores itself against. Decisions
// here only steer the search; certified errors always come from the metrics
// module afterwards. Node count is capped so high-dimensional runs stay cheap.
struct WorkGrid {
  int dim = 1;
  std::vector<double> xs;   // flattened nodes, stride dim
  std::vector<double> w;    // quadrature weights
  std::vector<double> aim;  // aim density at nodes
  std::size_t size() const { return w.size(); }
};

WorkGrid build_work_grid(const DensityFn& aim, const QuadratureSpec& spec, double q) {
  const Box box = spec.effective_domain();
  const int d = box.dim();
  int points = spec.points_per_axis;
  const double cap = 32768.0;
  while (points > 8 && std::pow(static_cast<double>(points), d) > cap) --points;
  const QuadratureRule rule =
      std::isinf(q) ? QuadratureRule::midpoint : spec.rule;
  const TensorGrid grid(box, rule, points);
  WorkGrid g;
  g.dim = d;
  g.xs.resize(grid.size() * static_cast<std::size_t>(d));
  g.w.resize(grid.size());
  g.aim.resize(grid.size());
  double x[8];
  for (std::size_t i = 0; i < grid.size(); ++i) {
    g.w[i] = grid.node(i, std::span<double>(x, static_cast<std::size_t>(d)));
    for (int k = 0; k < d; ++k) g.xs[i * static_cast<std::size_t>(d) + static_cast<std::size_t>(k)] = x[k];
    g.aim[i] = aim(std::span<const double>(x, static_cast<std::size_t>(d)));
  }
  return g;
}

std::vector<double> kernel_values(const WorkGrid& g, const ParentalDensity& parent, double sigma,
                                  const double* shift) {
  std::vector<double> out(g.size());
  for (std::size_t i = 0; i < g.size(); ++i)
    out[i] = scaled_kernel_at(parent, sigma, g.dim, shift,
                              g.xs.data() + i * static_cast<std::size_t>(g.dim));
  return out;
}

double grid_error(const WorkGrid& g, const std::vector<double>& mixvals, double q) {
  if (std::isinf(q)) {
    double best = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
      best = std::max(best, std::abs(g.aim[i] - mixvals[i]));
    return best;
  }
  PairwiseAccumulator acc;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double d = std::abs(g.aim[i] - mixvals[i]);
    acc.add(g.w[i] * (q == 2.0 ? d * d : std::pow(d, q)));
  }
  return std::pow(std::max(0.0, acc.total()), 1.0 / q);
}

void mixture_values(const std::vector<double>& weights,
                    const std::vector<std::vector<double>>& cv, std::vector<double>& out) {
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double a = weights[i];
    const std::vector<double>& v = cv[i];
    for (std::size_t gix = 0; gix < out.size(); ++gix) out[gix] += a * v[gix];
  }
}

// Euclidean projection onto the probability simplex (sort-based).
void project_to_simplex(std::vector<double>& v) {
  std::vector<double> u = v;
  std::sort(u.begin(), u.end(), std::greater<double>());
  double css = 0.0, theta = 0.0;
  int rho = 0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    css += u[j];
    const double t = (css - 1.0) / static_cast<double>(j + 1);
    if (u[j] - t > 0.0) {
      rho = static_cast<int>(j + 1);
      theta = t;
    }
  }
  (void)rho;
  double total = 0.0;
  for (double& x : v) {
    x = std::max(0.0, x - theta);
    total += x;
  }
  if (total > 0.0)
    for (double& x : v) x /= total;
  else
    std::fill(v.begin(), v.end(), 1.0 / static_cast<double>(v.size()));
}

// Golden-section minimization of fn over [a, b]; returns the best abscissa.
template <class Fn>
double golden_min(Fn&& fn, double a, double b, int iters) {
  const double invphi = 0.6180339887498948482;
  double x1 = b - invphi * (b - a);
  double x2 = a + invphi * (b - a);
  double f1 = fn(x1), f2 = fn(x2);
  for (int i = 0; i < iters; ++i) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = fn(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = fn(x2);
    }
  }
  return f1 < f2 ? x1 : x2;
}

struct RefineState {
  MixtureModel model;
  std::vector<std::vector<double>> cv;  // kernel values per component
  std::vector<double> mixvals;
  double err = 0.0;

  explicit RefineState(MixtureModel m) : model(std::move(m)) {}

  void rebuild(const WorkGrid& g, double q) {
    const std::size_t m = model.components();
    const std::size_t d = static_cast<std::size_t>(g.dim);
    cv.resize(m);
    for (std::size_t i = 0; i < m; ++i)
      cv[i] = kernel_values(g, model.parent, model.sigma, model.shifts.data() + i * d);
    mixvals.assign(g.size(), 0.0);
    mixture_values(model.weights, cv, mixvals);
    err = grid_error(g, mixvals, q);
  }
};

// Coordinate-wise shift moves and a weight re-fit; every change is kept only
// when the grid error strictly decreases.
void polish(RefineState& st, const WorkGrid& g, double q) {
  const std::size_t m = st.model.components();
  const std::size_t d = static_cast<std::size_t>(g.dim);
  const std::size_t G = g.size();
  std::vector<double> without(G), cand(G), trial(G);

  for (std::size_t i = 0; i < m; ++i) {
    const double a = st.model.weights[i];
    if (a <= 0.0) continue;
    for (std::size_t gix = 0; gix < G; ++gix)
      without[gix] = st.mixvals[gix] - a * st.cv[i][gix];
    for (std::size_t k = 0; k < d; ++k) {
      double mu[8];
      for (std::size_t kk = 0; kk < d; ++kk) mu[kk] = st.model.shifts[i * d + kk];
      const double center = mu[k];
      auto eval_at = [&](double t) {
        mu[k] = t;
        for (std::size_t gix = 0; gix < G; ++gix) {
          cand[gix] = scaled_kernel_at(st.model.parent, st.model.sigma, g.dim, mu,
                                       g.xs.data() + gix * d);
          trial[gix] = without[gix] + a * cand[gix];
        }
        return grid_error(g, trial, q);
      };
      const double span = st.model.sigma;
      const double best_t = golden_min(eval_at, center - span, center + span, 28);
      const double best_err = eval_at(best_t);
      if (best_err < st.err - 1e-15) {
        st.model.shifts[i * d + k] = best_t;
        st.cv[i] = cand;
        for (std::size_t gix = 0; gix < G; ++gix) st.mixvals[gix] = without[gix] + a * cand[gix];
        st.err = best_err;
        for (std::size_t gix = 0; gix < G; ++gix)
          without[gix] = st.mixvals[gix] - a * st.cv[i][gix];
      } else {
        mu[k] = center;
      }
    }
  }

  if (q == 2.0) {
    // Projected gradient on the quadratic weight objective.
    std::vector<double> wts = st.model.weights, grad(m), next(m);
    double step = 1.0;
    for (int it = 0; it < 60 && step > 1e-12; ++it) {
      for (std::size_t i = 0; i < m; ++i) {
        double s = 0.0;
        for (std::size_t gix = 0; gix < G; ++gix)
          s += g.w[gix] * (g.aim[gix] - st.mixvals[gix]) * st.cv[i][gix];
        grad[i] = -2.0 * s;
      }
      for (std::size_t i = 0; i < m; ++i) next[i] = wts[i] - step * grad[i];
      project_to_simplex(next);
      mixture_values(next, st.cv, st.mixvals);
      const double e = grid_error(g, st.mixvals, q);
      if (e < st.err - 1e-15) {
        wts = next;
        st.err = e;
        step *= 1.3;
      } else {
        step *= 0.5;
      }
      mixture_values(wts, st.cv, st.mixvals);
    }
    st.model.weights = wts;
    mixture_values(st.model.weights, st.cv, st.mixvals);
    st.err = grid_error(g, st.mixvals, q);
  } else if (m >= 2) {
    // Norms without a quadratic structure: golden-section weight transfers
    // along round-robin component pairs.
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t j = (i + 1) % m;
      const double ai = st.model.weights[i], aj = st.model.weights[j];
      auto eval_t = [&](double t) {
        for (std::size_t gix = 0; gix < G; ++gix)
          trial[gix] = st.mixvals[gix] + t * (st.cv[j][gix] - st.cv[i][gix]);
        return grid_error(g, trial, q);
      };
      const double t = golden_min(eval_t, -aj, ai, 24);
      const double e = eval_t(t);
      if (e < st.err - 1e-15) {
        st.model.weights[i] = ai - t;
        st.model.weights[j] = aj + t;
        for (std::size_t gix = 0; gix < G; ++gix)
          st.mixvals[gix] += t * (st.cv[j][gix] - st.cv[i][gix]);
        st.err = e;
      }
    }
  }
}

}  // namespace

double MixtureModel::operator()(std::span<const double> x) const {
  const std::size_t d = static_cast<std::size_t>(dim());
  if (x.size() != d) throw std::domain_error("MixtureModel: dimension mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i)
    total += weights[i] * scaled_kernel_at(parent, sigma, dim(), shifts.data() + i * d, x.data());
  return total;
}

DensityFn MixtureModel::fn() const {
  return [self = *this](std::span<const double> x) { return self(x); };
}

void MixtureModel::validate() const {
  if (weights.empty()) throw PreconditionError("MixtureModel: no components");
  if (shifts.size() != weights.size() * static_cast<std::size_t>(dim()))
    throw PreconditionError("MixtureModel: shifts length disagrees with weights and dimension");
  if (!(sigma > 0.0)) throw PreconditionError("MixtureModel: sigma must be positive");
  double total = 0.0;
  for (double a : weights) {
    if (!(a >= 0.0)) throw PreconditionError("MixtureModel: negative weight");
    total += a;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw PreconditionError("MixtureModel: weights must sum to 1 within 1e-12");
  for (double s : shifts)
    if (!std::isfinite(s)) throw PreconditionError("MixtureModel: non-finite shift");
}

Box MixtureModel::support_box() const {
  const Box pb = parent.support_box();
  const std::size_t d = static_cast<std::size_t>(dim());
  Box out = Box::cube(dim(), 0.0, 1.0);
  for (std::size_t k = 0; k < d; ++k) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      lo = std::min(lo, shifts[i * d + k] + sigma * pb.lo[k]);
      hi = std::max(hi, shifts[i * d + k] + sigma * pb.hi[k]);
    }
    out.lo[k] = lo;
    out.hi[k] = hi;
  }
  return out;
}

MixtureModel maurey_sample(const SmoothedDensity& smoothed, std::size_t m, std::uint64_t seed) {
  if (m < 1) throw PreconditionError("maurey_sample: m must be >= 1");
  const TargetDensity& target = smoothed.target();
  if (!target.has_sampler())
    throw UnsupportedError("maurey_sample: smoothing target has no sampler");
  const std::size_t d = static_cast<std::size_t>(target.dim());
  MixtureModel out{std::vector<double>(m, 1.0 / static_cast<double>(m)),
                   std::vector<double>(m * d), smoothed.sigma(), smoothed.parent()};
  Rng rng(seed);
  for (std::size_t i = 0; i < m; ++i)
    target.sample_into(rng, std::span<double>(out.shifts.data() + i * d, d));
  return out;
}

MixtureModel refine_toward(const DensityFn& aim, const TargetDensity* aim_sampler,
                           const MixtureModel& initial, int iterations, double q,
                           const QuadratureSpec& spec, std::uint64_t pool_seed) {
  initial.validate();
  if (iterations <= 0) return initial;
  if (std::isnan(q) || q < 1.0) throw PreconditionError("refine_toward: q must lie in [1, inf]");

  const WorkGrid g = build_work_grid(aim, spec, q);
  const std::size_t d = static_cast<std::size_t>(g.dim);
  const std::size_t G = g.size();
  const Box box = spec.effective_domain();

  // Candidate pool: draws from the aim density when available, deterministic
  // boundary anchors, the rest uniform over the working box. Frozen up front
  // so runs are reproducible. The anchors matter for kernels with one-sided
  // support: only a shift sitting on a box edge covers that edge, and random
  // pools essentially never land close enough.
  const std::size_t pool_size = 512;
  std::vector<double> pool(pool_size * d);
  Rng rng(pool_seed);
  std::size_t filled = 0;
  if (aim_sampler != nullptr && aim_sampler->has_sampler()) {
    const std::size_t draws = pool_size / 2;
    for (; filled < draws; ++filled)
      aim_sampler->sample_into(rng, std::span<double>(pool.data() + filled * d, d));
  }
  if (d <= 6) {
    const double deltas[] = {0.0, 1e-6, 1e-3, 1e-2};
    for (std::size_t corner = 0; corner < (std::size_t{1} << d); ++corner)
      for (double delta : deltas) {
        if (filled >= pool_size) break;
        for (std::size_t k = 0; k < d; ++k) {
          const double edge = (corner >> k) & 1 ? box.hi[k] : box.lo[k];
          const double center = 0.5 * (box.lo[k] + box.hi[k]);
          pool[filled * d + k] = edge + delta * (center - edge);
        }
        ++filled;
      }
  }
  for (; filled < pool_size; ++filled)
    for (std::size_t k = 0; k < d; ++k)
      pool[filled * d + k] = rng.uniform(box.lo[k], box.hi[k]);

  RefineState st(initial);
  st.rebuild(g, q);

  std::vector<double> candvals(G), residual(G), trialmix(G);
  int stale = 0;
  for (int it = 0; it < iterations; ++it) {
    if (it > 0 && it % 8 == 0) polish(st, g, q);
    const std::size_t m = st.model.components();

    for (std::size_t gix = 0; gix < G; ++gix) residual[gix] = g.aim[gix] - st.mixvals[gix];

    // Rank the pool: weighted correlation with the residual for integral
    // norms, height at the worst gap for the sup norm.
    std::size_t peak = 0;
    if (std::isinf(q)) {
      for (std::size_t gix = 1; gix < G; ++gix)
        if (std::abs(residual[gix]) > std::abs(residual[peak])) peak = gix;
    }
    std::vector<std::pair<double, std::size_t>> ranked(pool_size);
    for (std::size_t c = 0; c < pool_size; ++c) {
      double score;
      if (std::isinf(q)) {
        score = scaled_kernel_at(st.model.parent, st.model.sigma, g.dim, pool.data() + c * d,
                                 g.xs.data() + peak * d);
      } else {
        score = 0.0;
        for (std::size_t gix = 0; gix < G; ++gix)
          score += g.w[gix] * residual[gix] *
                   scaled_kernel_at(st.model.parent, st.model.sigma, g.dim, pool.data() + c * d,
                                    g.xs.data() + gix * d);
      }
      ranked[c] = {score, c};
    }
    std::sort(ranked.begin(), ranked.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    const std::size_t tries = std::isinf(q) ? 8 : 4;

    double best_err = st.err;
    std::vector<double> best_weights, best_shifts;
    std::vector<double> best_candvals;
    std::size_t best_drop = 0, best_cand = pool_size;

    for (std::size_t r = 0; r < std::min(tries, pool_size); ++r) {
      const std::size_t c = ranked[r].second;
      for (std::size_t gix = 0; gix < G; ++gix)
        candvals[gix] = scaled_kernel_at(st.model.parent, st.model.sigma, g.dim,
                                         pool.data() + c * d, g.xs.data() + gix * d);
      auto err_with_gamma = [&](double gamma) {
        // Append with weight gamma, drop the smallest weight, renormalize.
        double smallest = gamma;
        std::size_t drop = m;
        for (std::size_t i = 0; i < m; ++i) {
          const double wv = (1.0 - gamma) * st.model.weights[i];
          if (wv < smallest) {
            smallest = wv;
            drop = i;
          }
        }
        const double keep = 1.0 - smallest;
        if (keep <= 0.0) return std::make_pair(st.err + 1.0, drop);
        for (std::size_t gix = 0; gix < G; ++gix) {
          double v = (1.0 - gamma) * st.mixvals[gix] + gamma * candvals[gix];
          if (drop < m) v -= (1.0 - gamma) * st.model.weights[drop] * st.cv[drop][gix];
          else v -= gamma * candvals[gix];
          trialmix[gix] = v / keep;
        }
        return std::make_pair(grid_error(g, trialmix, q), drop);
      };

      double gamma;
      if (q == 2.0) {
        double num = 0.0, den = 0.0;
        for (std::size_t gix = 0; gix < G; ++gix) {
          const double dirg = candvals[gix] - st.mixvals[gix];
          num += g.w[gix] * residual[gix] * dirg;
          den += g.w[gix] * dirg * dirg;
        }
        gamma = den > 0.0 ? std::clamp(num / den, 0.0, 0.999) : 0.0;
      } else {
        gamma = golden_min([&](double t) { return err_with_gamma(t).first; }, 0.0, 0.9, 20);
      }
      const auto [e, drop] = err_with_gamma(gamma);
      if (e < best_err - 1e-15) {
        best_err = e;
        best_drop = drop;
        best_cand = c;
        best_candvals = candvals;
        // Materialize the weight/shift update lazily below; stash gamma via
        // weights rebuild.
        best_weights.assign(m + 1, 0.0);
        for (std::size_t i = 0; i < m; ++i) best_weights[i] = (1.0 - gamma) * st.model.weights[i];
        best_weights[m] = gamma;
      }
    }

    if (best_cand < pool_size) {
      const std::size_t m_old = st.model.components();
      std::vector<double> new_w, new_s;
      std::vector<std::vector<double>> new_cv;
      new_w.reserve(m_old);
      new_s.reserve(m_old * d);
      new_cv.reserve(m_old);
      double total = 0.0;
      for (std::size_t i = 0; i <= m_old; ++i) {
        if (i == best_drop) continue;
        new_w.push_back(best_weights[i]);
        total += best_weights[i];
        if (i < m_old) {
          new_s.insert(new_s.end(), st.model.shifts.begin() + static_cast<std::ptrdiff_t>(i * d),
                       st.model.shifts.begin() + static_cast<std::ptrdiff_t>((i + 1) * d));
          new_cv.push_back(std::move(st.cv[i]));
        } else {
          new_s.insert(new_s.end(), pool.begin() + static_cast<std::ptrdiff_t>(best_cand * d),
                       pool.begin() + static_cast<std::ptrdiff_t>((best_cand + 1) * d));
          new_cv.push_back(best_candvals);
        }
      }
      for (double& wv : new_w) wv /= total;
      st.model.weights = std::move(new_w);
      st.model.shifts = std::move(new_s);
      st.cv = std::move(new_cv);
      mixture_values(st.model.weights, st.cv, st.mixvals);
      st.err = grid_error(g, st.mixvals, q);
      stale = 0;
    } else {
      ++stale;
      if (stale >= 8) {
        const double before = st.err;
        polish(st, g, q);
        if (st.err >= before - 1e-15) break;
        stale = 0;
      }
    }
  }
  polish(st, g, q);

  // Guard against drift: exact renormalization, then the simplex invariant.
  double total = std::accumulate(st.model.weights.begin(), st.model.weights.end(), 0.0);
  for (double& wv : st.model.weights) wv /= total;
  st.model.validate();
  return st.model;
}

MixtureModel greedy_refine(const SmoothedDensity& smoothed, const MixtureModel& initial,
                           int iterations, const QuadratureSpec& spec) {
  const TargetDensity& t = smoothed.target();
  return refine_toward(smoothed.fn(), t.has_sampler() ? &t : nullptr, initial, iterations, 2.0,
                       spec, 1);
}

MixtureModel greedy_refine(const SmoothedDensity& smoothed, const MixtureModel& initial,
                           int iterations) {
  QuadratureSpec spec(smoothed.support_box());
  return greedy_refine(smoothed, initial, iterations, spec);
}

RateFit fit_rate(const SmoothedDensity& smoothed, double q,
                 const std::vector<std::size_t>& m_values, std::size_t trials,
                 std::uint64_t seed, const QuadratureSpec& spec) {
  std::vector<std::size_t> ms = m_values;
  std::sort(ms.begin(), ms.end());
  ms.erase(std::unique(ms.begin(), ms.end()), ms.end());
  if (ms.size() < 3) throw PreconditionError("fit_rate: need at least 3 distinct m values");
  if (trials < 10) throw PreconditionError("fit_rate: need at least 10 trials");
  if (std::isnan(q) || q < 1.0) throw PreconditionError("fit_rate: q must lie in [1, inf]");

  const WorkGrid g = build_work_grid(smoothed.fn(), spec, q);
  const std::size_t d = static_cast<std::size_t>(g.dim);
  const std::size_t G = g.size();

  const std::size_t jobs = ms.size() * trials;
  std::vector<double> errs(jobs, 0.0);
  std::vector<double> xi_per_job(jobs, 0.0);

  // Jobs are keyed (m, trial); results land in preassigned slots, so the
  // outcome does not depend on scheduling.
  for_chunks(jobs, 1, [&](std::size_t begin, std::size_t end, std::size_t) {
    std::vector<double> mixvals(G);
    for (std::size_t job = begin; job < end; ++job) {
      const std::size_t mi = job / trials;
      const std::size_t trial = job % trials;
      const std::size_t m = ms[mi];
      const MixtureModel mix =
          maurey_sample(smoothed, m, derive_seed(seed, m, trial));
      std::fill(mixvals.begin(), mixvals.end(), 0.0);
      double xi = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        PairwiseAccumulator kacc;
        for (std::size_t gix = 0; gix < G; ++gix) {
          const double kv = scaled_kernel_at(mix.parent, mix.sigma, g.dim,
                                             mix.shifts.data() + i * d, g.xs.data() + gix * d);
          mixvals[gix] += mix.weights[i] * kv;
          const double gap = std::abs(g.aim[gix] - kv);
          if (std::isinf(q))
            kacc.add(0.0);
          else
            kacc.add(g.w[gix] * (q == 2.0 ? gap * gap : std::pow(gap, q)));
        }
        if (std::isinf(q)) {
          double sup = 0.0;
          for (std::size_t gix = 0; gix < G; ++gix)
            sup = std::max(sup, std::abs(g.aim[gix] -
                                         scaled_kernel_at(mix.parent, mix.sigma, g.dim,
                                                          mix.shifts.data() + i * d,
                                                          g.xs.data() + gix * d)));
          xi = std::max(xi, sup);
        } else {
          xi = std::max(xi, std::pow(std::max(0.0, kacc.total()), 1.0 / q));
        }
      }
      errs[job] = grid_error(g, mixvals, q);
      xi_per_job[job] = xi;
    }
  });

  RateFit fit;
  fit.m_values = ms;
  fit.mean_errors.resize(ms.size());
  for (std::size_t mi = 0; mi < ms.size(); ++mi) {
    PairwiseAccumulator acc;
    for (std::size_t t = 0; t < trials; ++t) acc.add(errs[mi * trials + t]);
    fit.mean_errors[mi] = acc.total() / static_cast<double>(trials);
    if (!(fit.mean_errors[mi] > 0.0))
      throw PreconditionError("fit_rate: degenerate zero mean error; log-log fit undefined");
  }
  for (double x : xi_per_job) fit.xi_estimate = std::max(fit.xi_estimate, x);

  auto ols_slope = [&](const std::vector<double>& means) {
    const std::size_t n = ms.size();
    double sx = 0.0, sy = 0.0;
    std::vector<double> lx(n), ly(n);
    for (std::size_t i = 0; i < n; ++i) {
      lx[i] = std::log(static_cast<double>(ms[i]));
      ly[i] = std::log(means[i]);
      sx += lx[i];
      sy += ly[i];
    }
    const double mx = sx / static_cast<double>(n), my = sy / static_cast<double>(n);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      num += (lx[i] - mx) * (ly[i] - my);
      den += (lx[i] - mx) * (lx[i] - mx);
    }
    return num / den;
  };
  fit.slope = ols_slope(fit.mean_errors);

  // Bootstrap over trials within each m, 200 resamples.
  const std::size_t B = 200;
  std::vector<double> slopes(B);
  std::vector<double> means(ms.size());
  for (std::size_t b = 0; b < B; ++b) {
    Rng brng(derive_seed(seed, 0x626f6f74, b));
    bool ok = true;
    for (std::size_t mi = 0; mi < ms.size(); ++mi) {
      double s = 0.0;
      for (std::size_t t = 0; t < trials; ++t)
        s += errs[mi * trials + brng.index(trials)];
      means[mi] = s / static_cast<double>(trials);
      if (!(means[mi] > 0.0)) ok = false;
    }
    slopes[b] = ok ? ols_slope(means) : fit.slope;
  }
  std::sort(slopes.begin(), slopes.end());
  fit.slope_ci = {slopes[B / 40], slopes[B - 1 - B / 40]};
  return fit;
}

}  // namespace dbnapprox
