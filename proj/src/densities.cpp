#include "dbnapprox/densities.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "dbnapprox/errors.hpp"
#include "dbnapprox/textio.hpp"

namespace dbnapprox {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kInf = std::numeric_limits<double>::infinity();

void check_point(std::span<const double> x, int dim, const char* who) {
  if (static_cast<int>(x.size()) != dim)
    throw PreconditionError(std::string(who) + ": point dimension mismatch");
  for (double c : x)
    if (!std::isfinite(c)) throw PreconditionError(std::string(who) + ": non-finite coordinate");
}

void check_q(double q) {
  if (std::isnan(q) || q < 1.0) throw PreconditionError("q must lie in [1, inf]");
}

}  // namespace

ParentalDensity ParentalDensity::gaussian(int dim) {
  if (dim < 1) throw PreconditionError("gaussian: dim must be >= 1");
  ParentalDensity p;
  p.family_ = Family::gaussian;
  p.dim_ = dim;
  return p;
}

ParentalDensity ParentalDensity::truncated_exponential(std::vector<double> rates,
                                                       std::vector<double> uppers) {
  if (rates.empty() || rates.size() != uppers.size())
    throw PreconditionError("truncated_exponential: rates/uppers size mismatch");
  for (std::size_t i = 0; i < rates.size(); ++i)
    if (!(rates[i] > 0.0) || !(uppers[i] > 0.0))
      throw PreconditionError("truncated_exponential: rates and uppers must be positive");
  ParentalDensity p;
  p.family_ = Family::truncated_exponential;
  p.dim_ = static_cast<int>(rates.size());
  p.rates_ = std::move(rates);
  p.uppers_ = std::move(uppers);
  return p;
}

ParentalDensity ParentalDensity::custom(int dim, DensityFn eval, Box support,
                                        std::function<void(Rng&, std::span<double>)> sampler) {
  if (dim < 1 || support.dim() != dim) throw PreconditionError("custom: bad dim or support");
  if (!eval) throw PreconditionError("custom: evaluator required");
  ParentalDensity p;
  p.family_ = Family::custom;
  p.dim_ = dim;
  p.custom_eval_ = std::move(eval);
  p.custom_support_ = std::move(support);
  p.custom_sampler_ = std::move(sampler);
  return p;
}

double ParentalDensity::operator()(std::span<const double> x) const {
  check_point(x, dim_, "parental density");
  switch (family_) {
    case Family::gaussian: {
      double ss = 0.0;
      for (double c : x) ss += c * c;
      return std::pow(kTwoPi, -0.5 * dim_) * std::exp(-0.5 * ss);
    }
    case Family::truncated_exponential: {
      double v = 1.0;
      for (int i = 0; i < dim_; ++i) {
        const double c = x[i];
        if (c < 0.0 || c > uppers_[i]) return 0.0;
        v *= rates_[i] * std::exp(-rates_[i] * c) / (1.0 - std::exp(-rates_[i] * uppers_[i]));
      }
      return v;
    }
    case Family::custom:
      return custom_eval_(x);
  }
  return 0.0;
}

DensityFn ParentalDensity::fn() const {
  return [copy = *this](std::span<const double> x) { return copy(x); };
}

double ParentalDensity::lq_norm(double q) const {
  check_q(q);
  switch (family_) {
    case Family::gaussian: {
      if (std::isinf(q)) return std::pow(kTwoPi, -0.5 * dim_);
      // ||phi||_q^q = (2pi)^{-dq/2} (2pi/q)^{d/2}
      return std::pow(kTwoPi, -0.5 * dim_ * (1.0 - 1.0 / q)) * std::pow(q, -0.5 * dim_ / q);
    }
    case Family::truncated_exponential: {
      double v = 1.0;
      for (int i = 0; i < dim_; ++i) {
        const double l = rates_[i], b = uppers_[i];
        const double denom = 1.0 - std::exp(-l * b);
        if (std::isinf(q)) {
          v *= l / denom;  // attained at x_i = 0
        } else {
          v *= std::pow(l, 1.0 - 1.0 / q) / (std::pow(q, 1.0 / q) * denom) *
               std::pow(1.0 - std::exp(-q * l * b), 1.0 / q);
        }
      }
      return v;
    }
    case Family::custom:
      throw UnsupportedError("lq_norm: no closed form for a custom density");
  }
  return 0.0;
}

double ParentalDensity::gaussian_quoted_lq_form(int dim, double q) {
  check_q(q);
  if (std::isinf(q)) return std::pow(kTwoPi, -0.5 * dim);
  return std::pow(q, -0.5 * dim / q);
}

double ParentalDensity::sup_norm() const {
  if (family_ == Family::custom) throw UnsupportedError("sup_norm: custom density");
  return lq_norm(kInf);
}

Box ParentalDensity::support_box() const {
  switch (family_) {
    case Family::gaussian:
      return Box::cube(dim_, -12.0, 12.0);
    case Family::truncated_exponential:
      return Box(std::vector<double>(static_cast<std::size_t>(dim_), 0.0), uppers_);
    case Family::custom:
      return *custom_support_;
  }
  return Box::cube(dim_, -1.0, 1.0);
}

bool ParentalDensity::has_sampler() const {
  return family_ != Family::custom || static_cast<bool>(custom_sampler_);
}

void ParentalDensity::sample_into(Rng& rng, std::span<double> out) const {
  if (static_cast<int>(out.size()) != dim_) throw PreconditionError("sample_into: bad span");
  switch (family_) {
    case Family::gaussian:
      for (int i = 0; i < dim_; ++i) out[i] = rng.normal();
      return;
    case Family::truncated_exponential:
      // Inverse CDF per coordinate: F(x) = (1 - e^{-l x}) / (1 - e^{-l b}).
      for (int i = 0; i < dim_; ++i) {
        const double l = rates_[i], b = uppers_[i];
        const double u = rng.uniform01();
        out[i] = -std::log1p(-u * (1.0 - std::exp(-l * b))) / l;
      }
      return;
    case Family::custom:
      if (!custom_sampler_) throw UnsupportedError("sample: custom density has no sampler");
      custom_sampler_(rng, out);
      return;
  }
}

std::vector<double> ParentalDensity::sample(std::uint64_t seed, std::size_t count) const {
  Rng rng(seed);
  std::vector<double> pts(count * static_cast<std::size_t>(dim_));
  for (std::size_t k = 0; k < count; ++k)
    sample_into(rng, std::span<double>(pts.data() + k * dim_, static_cast<std::size_t>(dim_)));
  return pts;
}

std::string ParentalDensity::serialize() const {
  std::ostringstream os;
  switch (family_) {
    case Family::gaussian:
      os << "gaussian " << dim_;
      break;
    case Family::truncated_exponential:
      os << "truncated_exponential " << dim_;
      for (double l : rates_) os << ' ' << format_double(l);
      for (double b : uppers_) os << ' ' << format_double(b);
      break;
    case Family::custom:
      throw UnsupportedError("serialize: custom density");
  }
  return os.str();
}

ParentalDensity ParentalDensity::parse(const std::string& line) {
  std::istringstream is(line);
  std::string fam;
  int dim = 0;
  if (!(is >> fam >> dim) || dim < 1) throw PreconditionError("parental parse: bad header");
  if (fam == "gaussian") {
    std::string extra;
    if (is >> extra) throw PreconditionError("parental parse: trailing content");
    return gaussian(dim);
  }
  if (fam == "truncated_exponential") {
    std::vector<std::string> tok;
    std::string t;
    while (is >> t) tok.push_back(t);
    if (static_cast<int>(tok.size()) != 2 * dim)
      throw PreconditionError("parental parse: wrong parameter count");
    std::vector<double> rates, uppers;
    for (int i = 0; i < dim; ++i) rates.push_back(parse_double(tok[static_cast<std::size_t>(i)]));
    for (int i = 0; i < dim; ++i)
      uppers.push_back(parse_double(tok[static_cast<std::size_t>(dim + i)]));
    return truncated_exponential(std::move(rates), std::move(uppers));
  }
  throw PreconditionError("parental parse: unknown family '" + fam + "'");
}

ShiftedScaled::ShiftedScaled(ParentalDensity p, std::vector<double> mu, double sigma)
    : parent(std::move(p)), shift(std::move(mu)), scale(sigma) {
  if (static_cast<int>(shift.size()) != parent.dim())
    throw PreconditionError("shifted/scaled: shift dimension mismatch");
  if (!(scale > 0.0)) throw PreconditionError("shifted/scaled: scale must be positive");
}

double ShiftedScaled::operator()(std::span<const double> x) const {
  check_point(x, parent.dim(), "shifted/scaled density");
  double local[8];
  const int d = parent.dim();
  if (d > 8) throw PreconditionError("shifted/scaled: dimension cap exceeded");
  for (int i = 0; i < d; ++i) local[i] = (x[i] - shift[i]) / scale;
  return std::pow(scale, -d) * parent(std::span<const double>(local, static_cast<std::size_t>(d)));
}

DensityFn ShiftedScaled::fn() const {
  return [copy = *this](std::span<const double> x) { return copy(x); };
}

double ShiftedScaled::lq_norm(double q) const {
  return lq_scale_factor(scale, parent.dim(), q) * parent.lq_norm(q);
}

Box ShiftedScaled::support_box() const {
  Box b = parent.support_box();
  for (int i = 0; i < parent.dim(); ++i) {
    b.lo[i] = b.lo[i] * scale + shift[i];
    b.hi[i] = b.hi[i] * scale + shift[i];
  }
  return b;
}

void ShiftedScaled::sample_into(Rng& rng, std::span<double> out) const {
  parent.sample_into(rng, out);
  for (int i = 0; i < parent.dim(); ++i) out[i] = out[i] * scale + shift[i];
}

double lq_scale_factor(double sigma, int dim, double q) {
  check_q(q);
  if (!(sigma > 0.0)) throw PreconditionError("scale must be positive");
  if (std::isinf(q)) return std::pow(sigma, -dim);
  return std::pow(sigma, -dim * (1.0 - 1.0 / q));
}

namespace {

// Adaptive Simpson on [a,b] with absolute tolerance tol.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double fa,
                        double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate_1d(const std::function<double(double)>& f, double a, double b, double tol) {
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 48);
}

}  // namespace

double upsilon(double q) {
  check_q(q);
  if (std::isinf(q)) throw PreconditionError("upsilon: q must be finite");
  // E|Z|^q = sqrt(2/pi) * int_0^inf x^q e^{-x^2/2} dx; the integrand is
  // negligible beyond x = 14 for any q of practical size.
  const double upper = 14.0 + q;
  auto integrand = [q](double x) { return std::pow(x, q) * std::exp(-0.5 * x * x); };
  const double moment =
      std::sqrt(2.0 / 3.14159265358979323846264338328) * integrate_1d(integrand, 0.0, upper, 1e-13);
  return std::pow(std::max(1.0, moment), 1.0 / q);
}

double upsilon_quoted_form(double q) {
  check_q(q);
  return std::sqrt(2.0) * std::pow(3.14159265358979323846264338328, -0.5 / q) *
         std::tgamma(0.5 * (q + 1.0));
}

TargetDensity TargetDensity::standard_gaussian(int dim) {
  return gaussian_mixture({1.0}, std::vector<double>(static_cast<std::size_t>(dim), 0.0), {1.0},
                          dim);
}

TargetDensity TargetDensity::gaussian_mixture(std::vector<double> weights,
                                              std::vector<double> means,
                                              std::vector<double> scales, int dim) {
  const std::size_t k = weights.size();
  if (k == 0 || scales.size() != k || means.size() != k * static_cast<std::size_t>(dim))
    throw PreconditionError("gaussian_mixture: inconsistent component arrays");
  double sum = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw PreconditionError("gaussian_mixture: negative weight");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw PreconditionError("gaussian_mixture: weights must sum to 1");
  for (double s : scales)
    if (!(s > 0.0)) throw PreconditionError("gaussian_mixture: scales must be positive");

  TargetDensity t;
  t.dim_ = dim;
  t.gm_weights_ = std::move(weights);
  t.gm_means_ = std::move(means);
  t.gm_scales_ = std::move(scales);

  double lo = std::numeric_limits<double>::max(), hi = std::numeric_limits<double>::lowest();
  std::vector<double> blo(static_cast<std::size_t>(dim), lo), bhi(static_cast<std::size_t>(dim), hi);
  for (std::size_t j = 0; j < k; ++j)
    for (int i = 0; i < dim; ++i) {
      const double c = t.gm_means_[j * static_cast<std::size_t>(dim) + static_cast<std::size_t>(i)];
      const double r = 12.0 * t.gm_scales_[j];
      blo[static_cast<std::size_t>(i)] = std::min(blo[static_cast<std::size_t>(i)], c - r);
      bhi[static_cast<std::size_t>(i)] = std::max(bhi[static_cast<std::size_t>(i)], c + r);
    }
  t.support_ = Box(std::move(blo), std::move(bhi));

  t.eval_ = [w = t.gm_weights_, mu = t.gm_means_, sc = t.gm_scales_, dim](
                std::span<const double> x) {
    check_point(x, dim, "gaussian mixture");
    double v = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) {
      double ss = 0.0;
      for (int i = 0; i < dim; ++i) {
        const double z =
            (x[static_cast<std::size_t>(i)] -
             mu[j * static_cast<std::size_t>(dim) + static_cast<std::size_t>(i)]) /
            sc[j];
        ss += z * z;
      }
      v += w[j] * std::pow(kTwoPi * sc[j] * sc[j], -0.5 * dim) * std::exp(-0.5 * ss);
    }
    return v;
  };
  t.sampler_ = [w = t.gm_weights_, mu = t.gm_means_, sc = t.gm_scales_, dim](
                   Rng& rng, std::span<double> out) {
    const double u = rng.uniform01();
    double acc = 0.0;
    std::size_t pick = w.size() - 1;
    for (std::size_t j = 0; j < w.size(); ++j) {
      acc += w[j];
      if (u < acc) {
        pick = j;
        break;
      }
    }
    for (int i = 0; i < dim; ++i)
      out[static_cast<std::size_t>(i)] =
          mu[pick * static_cast<std::size_t>(dim) + static_cast<std::size_t>(i)] +
          sc[pick] * rng.normal();
  };
  return t;
}

TargetDensity TargetDensity::from_parental(const ParentalDensity& p) {
  TargetDensity t;
  t.dim_ = p.dim();
  t.support_ = p.support_box();
  t.eval_ = p.fn();
  if (p.has_sampler())
    t.sampler_ = [p](Rng& rng, std::span<double> out) { p.sample_into(rng, out); };
  if (p.family() == Family::truncated_exponential) {
    // Minimum over the support box, attained at the upper corner.
    double eta = 1.0;
    for (int i = 0; i < p.dim(); ++i) {
      const double l = p.rates()[static_cast<std::size_t>(i)];
      const double b = p.uppers()[static_cast<std::size_t>(i)];
      eta *= l * std::exp(-l * b) / (1.0 - std::exp(-l * b));
    }
    t.eta_ = eta;
  }
  return t;
}

TargetDensity TargetDensity::uniform_box(Box b) {
  TargetDensity t;
  t.dim_ = b.dim();
  const double density = 1.0 / b.volume();
  t.eta_ = density;
  t.eval_ = [b, density](std::span<const double> x) {
    check_point(x, b.dim(), "uniform density");
    return b.contains(x) ? density : 0.0;
  };
  t.sampler_ = [b](Rng& rng, std::span<double> out) {
    for (int i = 0; i < b.dim(); ++i)
      out[static_cast<std::size_t>(i)] =
          rng.uniform(b.lo[static_cast<std::size_t>(i)], b.hi[static_cast<std::size_t>(i)]);
  };
  t.support_ = std::move(b);
  return t;
}

double TargetDensity::clipped_ramp_constant(int m) {
  if (m < 1) throw PreconditionError("clipped_ramp: m must be >= 1");
  return 1.0 / (1.0 - 1.0 / (8.0 * m));
}

TargetDensity TargetDensity::clipped_ramp(int m) {
  const double c = clipped_ramp_constant(m);
  TargetDensity t;
  t.dim_ = 1;
  t.support_ = Box::cube(1, 0.0, 1.0);
  t.eta_ = 0.5 * c;  // value at x = 0
  t.eval_ = [m, c](std::span<const double> x) {
    check_point(x, 1, "clipped ramp");
    const double xx = x[0];
    if (xx < 0.0 || xx > 1.0) return 0.0;
    return c * std::min(1.0, m * xx + 0.5);
  };
  return t;
}

TargetDensity TargetDensity::custom(int dim, DensityFn eval, std::optional<Box> support,
                                    std::function<void(Rng&, std::span<double>)> sampler,
                                    double lower_bound_eta) {
  if (dim < 1 || !eval) throw PreconditionError("custom target: bad dim or evaluator");
  TargetDensity t;
  t.dim_ = dim;
  t.eval_ = std::move(eval);
  t.support_ = std::move(support);
  t.sampler_ = std::move(sampler);
  t.eta_ = lower_bound_eta;
  return t;
}

double TargetDensity::operator()(std::span<const double> x) const { return eval_(x); }

DensityFn TargetDensity::fn() const {
  return [copy = *this](std::span<const double> x) { return copy(x); };
}

bool TargetDensity::has_sampler() const { return static_cast<bool>(sampler_); }

std::vector<double> TargetDensity::sample(std::uint64_t seed, std::size_t count) const {
  if (!sampler_) throw UnsupportedError("sample: target has no sampler");
  Rng rng(seed);
  std::vector<double> pts(count * static_cast<std::size_t>(dim_));
  for (std::size_t k = 0; k < count; ++k)
    sampler_(rng, std::span<double>(pts.data() + k * dim_, static_cast<std::size_t>(dim_)));
  return pts;
}

void TargetDensity::sample_into(Rng& rng, std::span<double> out) const {
  if (!sampler_) throw UnsupportedError("sample: target has no sampler");
  sampler_(rng, out);
}

}  // namespace dbnapprox
