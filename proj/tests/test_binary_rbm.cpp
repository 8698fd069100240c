#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"

#include "dbnapprox/binary_rbm.hpp"
#include "dbnapprox/errors.hpp"
#include "dbnapprox/rng.hpp"

using namespace dbnapprox;

namespace {

BinaryRBM one_by_one() {
  BinaryRBM rbm;
  rbm.visible_count = 1;
  rbm.hidden_count = 1;
  rbm.weights = {0.7};
  rbm.visible_bias = {-0.3};
  rbm.hidden_bias = {0.9};
  return rbm;
}

BinaryRBM small_random(std::uint64_t seed, int v, int h) {
  Rng rng(seed);
  BinaryRBM rbm;
  rbm.visible_count = v;
  rbm.hidden_count = h;
  for (int i = 0; i < v * h; ++i) rbm.weights.push_back(rng.uniform(-1.5, 1.5));
  for (int i = 0; i < v; ++i) rbm.visible_bias.push_back(rng.uniform(-1.0, 1.0));
  for (int j = 0; j < h; ++j) rbm.hidden_bias.push_back(rng.uniform(-1.0, 1.0));
  return rbm;
}

DiscreteDistribution random_unit_target(std::uint64_t seed, int m) {
  Rng rng(seed);
  std::vector<double> alpha(static_cast<std::size_t>(m));
  double total = 0.0;
  for (double& a : alpha) {
    a = -std::log(rng.uniform01());
    total += a;
  }
  for (double& a : alpha) a /= total;
  return DiscreteDistribution::on_unit_vectors(alpha);
}

}  // namespace

TEST_SUITE("binary_rbm") {

TEST_CASE("four-state model matches the hand enumeration") {
  // All four states of the 1x1 model: E(0,0)=0, E(0,1)=0.9, E(1,0)=-0.3,
  // E(1,1)=1.3. Z and pi(v=1) below were computed from those by hand.
  const BinaryRBM rbm = one_by_one();
  rbm.validate();
  const PartitionReport rep = partition_and_marginals(rbm);
  CHECK(std::abs(rep.log_z - 1.1082194122332567) <= 1e-15);
  CHECK(std::abs(rep.z - std::exp(rep.log_z)) <= 1e-15 * rep.z);
  REQUIRE(rep.joint_materialized);
  CHECK(rep.joint.size() == 4);
  double mass = 0.0;
  for (const auto& [state, p] : rep.joint) mass += p;
  CHECK(std::abs(mass - 1.0) <= 1e-14);
  CHECK(std::abs(rep.visible_marginal.at(1) - 0.53562624173293618) <= 1e-15);
  CHECK(std::abs(rep.visible_marginal.at(0) + rep.visible_marginal.at(1) - 1.0) <= 1e-14);
}

TEST_CASE("energy agrees between vector and bitmask forms") {
  const BinaryRBM rbm = small_random(41, 3, 4);
  for (std::uint64_t v = 0; v < 8; ++v) {
    for (std::uint64_t h = 0; h < 16; ++h) {
      std::array<int, 3> vv{};
      std::array<int, 4> hh{};
      for (int i = 0; i < 3; ++i) vv[static_cast<std::size_t>(i)] = (v >> i) & 1 ? 1 : 0;
      for (int j = 0; j < 4; ++j) hh[static_cast<std::size_t>(j)] = (h >> j) & 1 ? 1 : 0;
      CHECK(energy(rbm, vv, hh) == energy_bits(rbm, v, h));
    }
  }
  const std::array<int, 2> bad{0, 1};
  const std::array<int, 4> ok{0, 0, 0, 0};
  CHECK_THROWS_AS(energy(rbm, bad, ok), PreconditionError);
}

TEST_CASE("visible marginal matches a brute-force sum over states") {
  const BinaryRBM rbm = small_random(99, 3, 2);
  const PartitionReport rep = partition_and_marginals(rbm);

  double z = 0.0;
  std::vector<double> marginal(8, 0.0);
  for (std::uint64_t v = 0; v < 8; ++v) {
    for (std::uint64_t h = 0; h < 4; ++h) {
      const double w = std::exp(-energy_bits(rbm, v, h));
      z += w;
      marginal[v] += w;
    }
  }
  CHECK(std::abs(rep.z - z) <= 1e-12 * z);
  for (std::uint64_t v = 0; v < 8; ++v) {
    CHECK(std::abs(rep.visible_marginal.at(v) - marginal[v] / z) <= 1e-13);
  }
}

TEST_CASE("unit-vector marginals agree between enumeration and the template recursion") {
  const SynthesisReport rep = synthesize_with_report(random_unit_target(7, 5), 1e-3);
  CHECK_FALSE(rep.used_descent);

  const UnitMarginals by_enum = unit_vector_marginals(rep.rbm, 24);
  // Cap 4 is below 5 + 6 units, which forces the template recursion.
  const UnitMarginals by_template = unit_vector_marginals(rep.rbm, 4);
  REQUIRE(by_enum.unit_probs.size() == 5);
  REQUIRE(by_template.unit_probs.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(std::abs(by_enum.unit_probs[i] - by_template.unit_probs[i]) <= 1e-12);
  }
  CHECK(std::abs(by_enum.deficiency - by_template.deficiency) <= 1e-12);
  CHECK(std::abs(by_enum.log_z - by_template.log_z) <= 1e-10 * std::abs(by_enum.log_z));
}

TEST_CASE("marginals outside both the cap and the template are refused") {
  const BinaryRBM rbm = small_random(3, 3, 4);
  CHECK_THROWS_AS(unit_vector_marginals(rbm, 2), ResourceError);
}

TEST_CASE("synthesis hits the requested deviation across sizes") {
  for (const int m : {2, 4, 6}) {
    const DiscreteDistribution target = random_unit_target(100 + static_cast<std::uint64_t>(m), m);
    const SynthesisReport rep = synthesize_with_report(target, 1e-3);
    rep.rbm.validate();
    CHECK(rep.rbm.visible_count == m);
    CHECK(rep.rbm.hidden_count == m + 1);
    CHECK(rep.achieved_deviation <= 1e-3);

    // Re-check the deviation through the full enumeration path.
    const PartitionReport part = partition_and_marginals(rep.rbm);
    double worst = 0.0;
    for (const auto& [mask, p] : part.visible_marginal) {
      worst = std::max(worst, std::abs(target.prob(mask) - p));
    }
    CHECK(worst <= 1e-3);
    CHECK(std::abs(worst - rep.achieved_deviation) <= 1e-12);
  }
}

TEST_CASE("serialization round-trips every parameter bit") {
  const SynthesisReport rep = synthesize_with_report(random_unit_target(55, 4), 1e-3);
  const std::string text = rep.rbm.serialize();
  const BinaryRBM back = BinaryRBM::parse(text);
  CHECK(back.visible_count == rep.rbm.visible_count);
  CHECK(back.hidden_count == rep.rbm.hidden_count);
  CHECK(back.weights == rep.rbm.weights);
  CHECK(back.visible_bias == rep.rbm.visible_bias);
  CHECK(back.hidden_bias == rep.rbm.hidden_bias);
  CHECK(back.serialize() == text);
}

TEST_CASE("parse rejects malformed text") {
  CHECK_THROWS_AS(BinaryRBM::parse("boltzmann 1 1\n0\n0\n0\n"), PreconditionError);
  CHECK_THROWS_AS(BinaryRBM::parse("binary_rbm 2"), PreconditionError);
  CHECK_THROWS_AS(BinaryRBM::parse("binary_rbm 1 1\n0.5\n-0.5\n"), PreconditionError);
  CHECK_THROWS_AS(BinaryRBM::parse("binary_rbm 1 1\n0.5\n-0.5\n0.25\n1.0\n"), PreconditionError);
  CHECK_THROWS_AS(BinaryRBM::parse("binary_rbm 1 1\n0.5\nabc\n0.25\n"), PreconditionError);
}

TEST_CASE("validate enforces the layer-size ceiling") {
  BinaryRBM big;
  big.visible_count = 64;
  big.hidden_count = 65;
  big.weights.assign(64 * 65, 0.0);
  big.visible_bias.assign(64, 0.0);
  big.hidden_bias.assign(65, 0.0);
  big.validate();

  big.visible_count = 65;
  big.hidden_count = 64;
  big.weights.assign(65 * 64, 0.0);
  big.visible_bias.assign(65, 0.0);
  big.hidden_bias.assign(64, 0.0);
  CHECK_THROWS_AS(big.validate(), PreconditionError);

  big.visible_count = 1;
  big.hidden_count = 66;
  big.weights.assign(66, 0.0);
  big.visible_bias.assign(1, 0.0);
  big.hidden_bias.assign(66, 0.0);
  CHECK_THROWS_AS(big.validate(), PreconditionError);

  BinaryRBM bad = one_by_one();
  bad.weights = {0.7, 0.1};
  CHECK_THROWS_AS(bad.validate(), PreconditionError);
  bad = one_by_one();
  bad.hidden_bias = {std::nan("")};
  CHECK_THROWS_AS(bad.validate(), PreconditionError);
}

TEST_CASE("joint sampling is exact and repeatable") {
  const BinaryRBM rbm = small_random(17, 3, 3);
  const auto draws = sample_hidden_pair(rbm, 2024, 4096);
  REQUIRE(draws.size() == 4096);
  for (const auto& [v, h] : draws) {
    CHECK(v < 8);
    CHECK(h < 8);
  }
  CHECK(sample_hidden_pair(rbm, 2024, 4096) == draws);
  CHECK(sample_hidden_pair(rbm, 2025, 4096) != draws);

  // Empirical visible frequencies sit within a loose CLT band of the exact
  // marginal.
  const PartitionReport rep = partition_and_marginals(rbm);
  std::vector<double> freq(8, 0.0);
  for (const auto& [v, h] : draws) freq[v] += 1.0 / 4096.0;
  for (std::uint64_t v = 0; v < 8; ++v) {
    const double p = rep.visible_marginal.at(v);
    CHECK(std::abs(freq[v] - p) <= 5.0 * std::sqrt(p * (1.0 - p) / 4096.0) + 1e-3);
  }
}

TEST_CASE("descent stage lowers the marginal deviation") {
  const DiscreteDistribution target = random_unit_target(31, 3);
  // A deliberately loose first pass leaves room for the descent to improve.
  const SynthesisReport coarse = synthesize_with_report(target, 0.05);
  REQUIRE(coarse.achieved_deviation > 1e-6);
  const SynthesisReport refined = refine_marginal_kl(coarse.rbm, target, 1e-6, 400);
  CHECK(refined.achieved_deviation < coarse.achieved_deviation);
  CHECK(refined.used_descent);

  const DiscreteDistribution wrong_dim = random_unit_target(31, 4);
  CHECK_THROWS_AS(refine_marginal_kl(coarse.rbm, wrong_dim, 1e-6, 10), PreconditionError);
}

}  // TEST_SUITE
