#include <cmath>
#include <limits>

#include "doctest.h"

#include "dbnapprox/densities.hpp"
#include "dbnapprox/errors.hpp"
#include "dbnapprox/metrics.hpp"
#include "dbnapprox/parallel.hpp"
#include "dbnapprox/smoothing.hpp"

using namespace dbnapprox;

namespace {

double normal_pdf(double x, double var) {
  return std::exp(-x * x / (2.0 * var)) / std::sqrt(2.0 * M_PI * var);
}

}  // namespace

TEST_SUITE("smoothing") {

TEST_CASE("gaussian target and kernel convolve in closed form") {
  const TargetDensity target = TargetDensity::standard_gaussian(1);
  const ParentalDensity parent = ParentalDensity::gaussian(1);
  const SmoothedDensity s = convolve(target, parent, 0.5);
  CHECK(s.mode() == ConvolveMode::closed_form_gaussian);
  // N(0,1) * N(0, 0.25) = N(0, 1.25).
  for (const double x : {0.0, 0.7, -1.3, 2.4}) {
    const double v[] = {x};
    CHECK(std::abs(s(v) - normal_pdf(x, 1.25)) <= 1e-14);
  }
}

TEST_CASE("mixture targets convolve component by component") {
  const TargetDensity target =
      TargetDensity::gaussian_mixture({0.3, 0.7}, {-1.0, 1.5}, {0.5, 1.0}, 1);
  const SmoothedDensity s = convolve(target, ParentalDensity::gaussian(1), 0.25);
  const double x[] = {0.2};
  const double expected = 0.3 * normal_pdf(0.2 + 1.0, 0.25 + 0.0625) +
                          0.7 * normal_pdf(0.2 - 1.5, 1.0 + 0.0625);
  CHECK(std::abs(s(x) - expected) <= 1e-14);
}

TEST_CASE("quadrature mode against an exact convolution") {
  // Uniform on [0,1] convolved with the one-sided TE(1,1) kernel at scale
  // sigma: value is the kernel CDF difference K(min(sigma,x)) - K(max(0,x-1)),
  // K(t) = (1 - e^(-t/sigma)) / (1 - e^(-1)) on [0, sigma].
  const TargetDensity target = TargetDensity::uniform_box(Box({0.0}, {1.0}));
  const ParentalDensity te = ParentalDensity::truncated_exponential({1.0}, {1.0});
  const double sigma = 0.25;
  const SmoothedDensity s = convolve(target, te, sigma);
  CHECK(s.mode() == ConvolveMode::quadrature);
  const auto cdf = [&](double t) {
    return (1.0 - std::exp(-t / sigma)) / (1.0 - std::exp(-1.0));
  };
  for (const double x : {0.1, 0.5, 0.9, 1.1}) {
    const double lo = std::max(0.0, x - 1.0);
    const double hi = std::min(sigma, x);
    const double expected = hi > lo ? cdf(hi) - cdf(lo) : 0.0;
    const double v[] = {x};
    CHECK(std::abs(s(v) - expected) <= 2e-3);
  }

  // Mass is conserved.
  QuadratureSpec spec(Box({-0.5}, {1.5}));
  CHECK(std::abs(integrate(s.fn(), spec).value - 1.0) <= 1e-6);
}

TEST_CASE("monte carlo mode reports its standard error") {
  const TargetDensity target = TargetDensity::custom(
      1, TargetDensity::standard_gaussian(1).fn(), std::nullopt,
      [](Rng& rng, std::span<double> out) { out[0] = rng.normal(); });
  const SmoothedDensity s = convolve(target, ParentalDensity::gaussian(1), 0.5,
                                     ConvolveMode::monte_carlo, 40000, 11);
  CHECK(s.mode() == ConvolveMode::monte_carlo);
  const double x[] = {0.3};
  const auto [value, se] = s.value_and_se(x);
  CHECK(se > 0.0);
  CHECK(std::abs(value - normal_pdf(0.3, 1.25)) <= 5.0 * se + 1e-4);
}

TEST_CASE("convolve without structure needs a box or a sampler") {
  const TargetDensity bare =
      TargetDensity::custom(1, [](std::span<const double>) { return 1.0; });
  CHECK_THROWS_AS(convolve(bare, ParentalDensity::gaussian(1), 0.5), UnsupportedError);
}

TEST_CASE("select_sigma returns the largest budget-satisfying scale") {
  const TargetDensity target = TargetDensity::standard_gaussian(1);
  const ParentalDensity parent = ParentalDensity::gaussian(1);
  QuadratureSpec spec(Box({-13.0}, {13.0}));
  const double tol = 0.05;
  const double sigma = select_sigma(target, parent, 2.0, tol, spec);

  const double err =
      lq_distance(target.fn(), convolve(target, parent, sigma).fn(), 2.0, spec).value;
  CHECK(err <= tol);
  const double err2 =
      lq_distance(target.fn(), convolve(target, parent, 2.0 * sigma).fn(), 2.0, spec).value;
  CHECK(err2 > tol);
  // Scales live on the halving grid.
  CHECK(std::abs(std::exp2(std::round(std::log2(sigma))) - sigma) <= 1e-15);
}

TEST_CASE("quadrature smoothing is worker-count invariant") {
  const TargetDensity target = TargetDensity::uniform_box(Box({0.0}, {1.0}));
  const SmoothedDensity s =
      convolve(target, ParentalDensity::truncated_exponential({1.0}, {1.0}), 0.125);
  const double x[] = {0.6};
  set_worker_count(1);
  const double a = s(x);
  set_worker_count(4);
  CHECK(s(x) == a);
  set_worker_count(1);
}

}  // TEST_SUITE
