#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "doctest.h"

#include "dbnapprox/densities.hpp"
#include "dbnapprox/errors.hpp"

using namespace dbnapprox;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Kolmogorov-Smirnov statistic of a 1d sample against a given CDF.
double ks_statistic(std::vector<double> xs, double (*cdf)(double)) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    worst = std::max(worst, std::abs(f - static_cast<double>(i) / n));
    worst = std::max(worst, std::abs(f - static_cast<double>(i + 1) / n));
  }
  return worst;
}

double te11_cdf(double x) { return (1.0 - std::exp(-x)) / (1.0 - std::exp(-1.0)); }

}  // namespace

TEST_SUITE("densities") {

TEST_CASE("gaussian norms match the defining integral's closed form") {
  // (2 pi)^(-d/2 (1-1/q)) q^(-d/(2q)), evaluated independently to 17 digits.
  const struct {
    int d;
    double q;
    double expected;
  } cases[] = {
      {1, 1.0, 1.0},
      {1, 1.5, 0.6430917461240918},
      {1, 2.0, 0.53112596601359846},
      {1, 3.0, 0.45125272213799708},
      {1, 4.0, 0.42210942608374376},
      {2, 1.0, 1.0},
      {2, 1.5, 0.41356699393293334},
      {2, 2.0, 0.28209479177387814},
      {2, 3.0, 0.2036290192369524},
      {2, 4.0, 0.17817636758874754},
  };
  for (const auto& c : cases) {
    const ParentalDensity p = ParentalDensity::gaussian(c.d);
    CHECK(std::abs(p.lq_norm(c.q) - c.expected) <= 1e-15);
  }
  CHECK(std::abs(ParentalDensity::gaussian(1).lq_norm(kInf) - 0.39894228040143268) <= 1e-16);
  CHECK(std::abs(ParentalDensity::gaussian(2).sup_norm() - 0.15915494309189534) <= 1e-16);
}

TEST_CASE("gaussian quoted form only agrees at q = 1") {
  CHECK(ParentalDensity::gaussian_quoted_lq_form(1, 1.0) == 1.0);
  // q^(-d/(2q)) at d=1, q=2 is 2^(-1/4).
  const double quoted = ParentalDensity::gaussian_quoted_lq_form(1, 2.0);
  CHECK(std::abs(quoted - 0.84089641525371454) <= 1e-15);
  CHECK(std::abs(quoted - ParentalDensity::gaussian(1).lq_norm(2.0)) > 0.17);
}

TEST_CASE("truncated exponential norms match the per-axis closed form") {
  const ParentalDensity te = ParentalDensity::truncated_exponential({1.0}, {1.0});
  CHECK(te.lq_norm(1.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(te.lq_norm(2.0) - 1.0401810933050679) <= 1e-15);
  CHECK(std::abs(te.lq_norm(1.5) - 1.0202456524460544) <= 1e-15);
  CHECK(std::abs(te.lq_norm(4.0) - 1.1134688064975742) <= 1e-15);
  CHECK(std::abs(te.lq_norm(kInf) - 1.5819767068693264) <= 1e-15);

  const ParentalDensity te2 = ParentalDensity::truncated_exponential({2.0}, {0.5});
  CHECK(std::abs(te2.lq_norm(2.0) - 1.4710382094761009) <= 1e-14);
  CHECK(std::abs(te2.lq_norm(3.0) - 1.7118011310860369) <= 1e-14);

  // Product structure across axes.
  const ParentalDensity prod = ParentalDensity::truncated_exponential({1.0, 2.0}, {1.0, 0.5});
  CHECK(prod.lq_norm(2.0) ==
        doctest::Approx(te.lq_norm(2.0) * te2.lq_norm(2.0)).epsilon(1e-14));
}

TEST_CASE("interpolation inequality holds for the stock kernels") {
  // ||phi||_2 <= sqrt(||phi||_1 ||phi||_inf) for any density.
  for (const ParentalDensity& p :
       {ParentalDensity::gaussian(1), ParentalDensity::gaussian(2),
        ParentalDensity::truncated_exponential({1.0}, {1.0}),
        ParentalDensity::truncated_exponential({3.0, 0.5}, {0.7, 2.0})}) {
    CHECK(p.lq_norm(2.0) <= std::sqrt(p.lq_norm(1.0) * p.lq_norm(kInf)) + 1e-15);
  }
}

TEST_CASE("pointwise kernel values") {
  const ParentalDensity g = ParentalDensity::gaussian(1);
  const double x0[] = {0.0}, x1[] = {1.0};
  CHECK(std::abs(g(x0) - 0.39894228040143268) <= 1e-16);
  CHECK(std::abs(g(x1) - 0.24197072451914335) <= 1e-16);

  const ParentalDensity te = ParentalDensity::truncated_exponential({1.0}, {1.0});
  CHECK(std::abs(te(x0) - 1.5819767068693264) <= 1e-15);
  const double outside[] = {1.5};
  CHECK(te(outside) == 0.0);
  const double neg[] = {-0.25};
  CHECK(te(neg) == 0.0);

  const double bad[] = {std::numeric_limits<double>::quiet_NaN()};
  CHECK_THROWS_AS(g(bad), PreconditionError);
}

TEST_CASE("shifted scaled kernels rescale norms by the closed factor") {
  const ParentalDensity g = ParentalDensity::gaussian(2);
  const ShiftedScaled shifted(g, {1.0, -2.0}, 0.25);
  CHECK(lq_scale_factor(0.25, 2, 2.0) == doctest::Approx(std::pow(0.25, -1.0)).epsilon(1e-15));
  CHECK(lq_scale_factor(0.25, 2, kInf) == doctest::Approx(16.0).epsilon(1e-15));
  CHECK(shifted.lq_norm(2.0) ==
        doctest::Approx(lq_scale_factor(0.25, 2, 2.0) * g.lq_norm(2.0)).epsilon(1e-14));

  // Peak sits at the shift and carries the sigma^-d factor.
  const double at_peak[] = {1.0, -2.0};
  CHECK(shifted(at_peak) == doctest::Approx(16.0 * 0.15915494309189534).epsilon(1e-14));
}

TEST_CASE("maurey constant by quadrature") {
  CHECK(std::abs(upsilon(1.0) - 1.0) <= 1e-9);
  CHECK(std::abs(upsilon(2.0) - 1.0) <= 1e-9);
  CHECK(std::abs(upsilon(3.0) - 1.1685752549624655) <= 1e-9);
  CHECK(std::abs(upsilon(4.0) - 1.3160740129524925) <= 1e-8);
  // The alternate printed expression coincides at q = 3 but not at q = 4.
  CHECK(std::abs(upsilon_quoted_form(3.0) - upsilon(3.0)) <= 1e-9);
  CHECK(std::abs(upsilon_quoted_form(4.0) - 1.6293240328327984) <= 1e-12);
  CHECK(std::abs(upsilon_quoted_form(4.0) - upsilon(4.0)) > 0.3);
  CHECK(std::abs(upsilon_quoted_form(2.0) - 0.94139626377671481) <= 1e-12);
}

TEST_CASE("target density constructors") {
  const TargetDensity sg = TargetDensity::standard_gaussian(1);
  const double x[] = {0.0};
  CHECK(std::abs(sg(x) - 0.39894228040143268) <= 1e-16);
  CHECK(sg.is_gaussian_mixture());
  CHECK(sg.has_sampler());

  const TargetDensity mix =
      TargetDensity::gaussian_mixture({0.25, 0.75}, {-1.0, 2.0}, {0.5, 0.5}, 1);
  CHECK(std::abs(mix(x) - 0.027196228595241354) <= 1e-16);
  const double x15[] = {1.5};
  CHECK(std::abs(mix(x15) - 0.36295683013847239) <= 1e-15);

  const TargetDensity uni = TargetDensity::uniform_box(Box({0.0, 0.0}, {2.0, 1.0}));
  const double inside[] = {1.0, 0.5};
  const double outside[] = {2.5, 0.5};
  CHECK(uni(inside) == 0.5);
  CHECK(uni(outside) == 0.0);
  CHECK(uni.lower_bound_eta() == 0.5);

  CHECK_THROWS_AS(TargetDensity::gaussian_mixture({0.5, 0.6}, {0.0, 0.0}, {1.0, 1.0}, 1),
                  PreconditionError);
}

TEST_CASE("clipped ramp family") {
  CHECK(TargetDensity::clipped_ramp_constant(2) == 16.0 / 15.0);
  CHECK(TargetDensity::clipped_ramp_constant(1) == doctest::Approx(8.0 / 7.0).epsilon(1e-16));
  const TargetDensity f = TargetDensity::clipped_ramp(4);
  const double c = TargetDensity::clipped_ramp_constant(4);
  const double at0[] = {0.0};
  const double at_kink[] = {1.0 / 8.0};
  const double at1[] = {1.0};
  const double beyond[] = {1.25};
  CHECK(f(at0) == doctest::Approx(c / 2.0).epsilon(1e-15));
  CHECK(f(at_kink) == doctest::Approx(c).epsilon(1e-15));
  CHECK(f(at1) == doctest::Approx(c).epsilon(1e-15));
  CHECK(f(beyond) == 0.0);
  CHECK(f.lower_bound_eta() == doctest::Approx(c / 2.0).epsilon(1e-15));
}

TEST_CASE("from_parental carries the kernel's floor") {
  const ParentalDensity te = ParentalDensity::truncated_exponential({1.0}, {1.0});
  const TargetDensity f = TargetDensity::from_parental(te);
  const double x[] = {0.25};
  CHECK(f(x) == doctest::Approx(te(x)).epsilon(1e-16));
  CHECK(std::abs(f.lower_bound_eta() - 0.58197670686932642) <= 1e-15);
  CHECK(f.has_sampler());
  REQUIRE(f.support_hint().has_value());
  CHECK(f.support_hint()->lo[0] == 0.0);
  CHECK(f.support_hint()->hi[0] == 1.0);
}

TEST_CASE("samplers are deterministic and match their distributions") {
  const ParentalDensity g = ParentalDensity::gaussian(1);
  const std::vector<double> a = g.sample(99, 4096);
  const std::vector<double> b = g.sample(99, 4096);
  CHECK(a == b);
  CHECK(g.sample(100, 4096) != a);
  CHECK(ks_statistic(a, normal_cdf) < 0.03);

  const ParentalDensity te = ParentalDensity::truncated_exponential({1.0}, {1.0});
  const std::vector<double> t = te.sample(7, 4096);
  for (const double v : t) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  CHECK(ks_statistic(t, te11_cdf) < 0.03);
}

TEST_CASE("parental serialization round trips") {
  const ParentalDensity g = ParentalDensity::gaussian(3);
  CHECK(g.serialize() == "gaussian 3");
  const ParentalDensity g2 = ParentalDensity::parse(g.serialize());
  CHECK(g2.dim() == 3);
  CHECK(g2.family() == Family::gaussian);

  const ParentalDensity te = ParentalDensity::truncated_exponential({0.1, 2.5}, {1.0, 0.3});
  const std::string line = te.serialize();
  const ParentalDensity te2 = ParentalDensity::parse(line);
  CHECK(te2.serialize() == line);
  CHECK(te2.rates() == te.rates());
  CHECK(te2.uppers() == te.uppers());

  CHECK_THROWS_AS(ParentalDensity::parse("lognormal 1"), PreconditionError);
  CHECK_THROWS_AS(ParentalDensity::parse("gaussian"), PreconditionError);
  CHECK_THROWS_AS(ParentalDensity::parse("truncated_exponential 2 1 1 1"), PreconditionError);
  CHECK_THROWS_AS(ParentalDensity::parse("gaussian 2 7"), PreconditionError);
}

TEST_CASE("custom densities decline closed-form norms") {
  const ParentalDensity c = ParentalDensity::custom(
      1, [](std::span<const double>) { return 1.0; }, Box({0.0}, {1.0}));
  CHECK_THROWS_AS(c.lq_norm(2.0), UnsupportedError);
  CHECK_FALSE(c.has_sampler());
}

}  // TEST_SUITE
