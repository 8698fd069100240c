// Acceptance gate: one self-contained check per release criterion, each with
// a pinned tolerance and a wall-clock budget. Run with no arguments for the
// full gate or with --only N for a single criterion. Every criterion prints
// exactly one [PASS]/[FAIL] line; failures add indented diagnostics.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "dbnapprox/binary_rbm.hpp"
#include "dbnapprox/dbn.hpp"
#include "dbnapprox/densities.hpp"
#include "dbnapprox/errors.hpp"
#include "dbnapprox/harness.hpp"
#include "dbnapprox/metrics.hpp"
#include "dbnapprox/mixture.hpp"
#include "dbnapprox/parallel.hpp"
#include "dbnapprox/rng.hpp"
#include "dbnapprox/smoothing.hpp"

using namespace dbnapprox;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool passed = true;
  std::vector<std::string> notes;

  void require(bool cond, const std::string& label) {
    if (!cond) {
      passed = false;
      notes.push_back("FAILED: " + label);
    }
  }
  void note(const std::string& label) { notes.push_back(label); }
};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

double ls_slope(const std::vector<double>& ms, const std::vector<double>& errs) {
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double n = static_cast<double>(ms.size());
  for (std::size_t i = 0; i < ms.size(); ++i) {
    const double x = std::log(ms[i]);
    const double y = std::log(errs[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path scratch_dir(const char* tag) {
  const fs::path dir = fs::temp_directory_path() / (std::string("dbnapprox_gate_") + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// ---------------------------------------------------------------------------
// 1. Closed-form L^q norms agree with quadrature for both kernel families.

void check_norms(Outcome& out) {
  const DensityFn zero = [](std::span<const double>) { return 0.0; };
  const std::vector<double> qs = {1.0, 1.5, 2.0, 3.0, 4.0};

  for (const int d : {1, 2}) {
    const ParentalDensity g = ParentalDensity::gaussian(d);
    QuadratureSpec spec(g.support_box());
    for (const double q : qs) {
      const double closed = g.lq_norm(q);
      const double quad = lq_distance(g.fn(), zero, q, spec).value;
      const double err = std::abs(closed - quad);
      out.require(err <= 1e-6, "gaussian d=" + std::to_string(d) + " q=" + fmt(q) +
                                   " |closed-quadrature| = " + fmt(err) + " > 1e-6");
    }
  }

  const ParentalDensity te = ParentalDensity::truncated_exponential({1.0}, {1.0});
  QuadratureSpec spec(te.support_box());
  for (const double q : qs) {
    const double closed = te.lq_norm(q);
    const double quad = lq_distance(te.fn(), zero, q, spec).value;
    const double err = std::abs(closed - quad);
    out.require(err <= 1e-6, "truncated_exponential q=" + fmt(q) +
                                 " |closed-quadrature| = " + fmt(err) + " > 1e-6");
  }

  // The commonly quoted gaussian form q^(-d/(2q)) drops a (2pi) power and
  // matches quadrature only at q = 1; its gap is reported, not asserted.
  out.note("gaussian d=1 q=2: quoted form " +
           fmt(ParentalDensity::gaussian_quoted_lq_form(1, 2.0)) + " vs quadrature-confirmed " +
           fmt(ParentalDensity::gaussian(1).lq_norm(2.0)) + " (gap reported, not asserted)");
}

// ---------------------------------------------------------------------------
// 2. The interpolation constant: exact at q in {1,2}, 3^(1/4) at q = 4, and
//    the commonly quoted closed form is reported alongside, not asserted.

void check_upsilon(Outcome& out) {
  out.require(std::abs(upsilon(1.0) - 1.0) <= 1e-8,
              "upsilon(1) = " + fmt(upsilon(1.0)) + ", expected 1");
  out.require(std::abs(upsilon(2.0) - 1.0) <= 1e-8,
              "upsilon(2) = " + fmt(upsilon(2.0)) + ", expected 1");
  const double expected4 = std::pow(3.0, 0.25);
  out.require(std::abs(upsilon(4.0) - expected4) <= 1e-6,
              "upsilon(4) = " + fmt(upsilon(4.0)) + ", expected 3^(1/4)");
  for (const double q : {3.0, 4.0}) {
    out.note("q=" + fmt(q) + ": upsilon = " + fmt(upsilon(q)) +
             ", quoted form = " + fmt(upsilon_quoted_form(q)) + " (reported, not asserted)");
  }
}

// ---------------------------------------------------------------------------
// 3. Maurey rate in L2: mean errors fall like m^(-1/2) and stay under the
//    dimension-free bound with a factor-3 cushion.

void check_rate_l2(Outcome& out) {
  const SmoothedDensity s =
      convolve(TargetDensity::standard_gaussian(1), ParentalDensity::gaussian(1), 0.1);
  QuadratureSpec spec(Box({-13.0}, {13.0}));
  const std::vector<std::size_t> ms = {4, 16, 64, 256};
  const RateFit fit = fit_rate(s, 2.0, ms, 50, 20240901, spec);

  std::vector<double> md;
  for (const std::size_t m : ms) md.push_back(static_cast<double>(m));
  for (std::size_t i = 0; i < ms.size(); ++i) {
    const double bound = upsilon(2.0) * fit.xi_estimate /
                         std::sqrt(static_cast<double>(ms[i])) * 3.0;
    out.require(fit.mean_errors[i] <= bound,
                "m=" + std::to_string(ms[i]) + " mean error " + fmt(fit.mean_errors[i]) +
                    " above cushioned bound " + fmt(bound));
    out.note("m=" + std::to_string(ms[i]) + ": mean error " + fmt(fit.mean_errors[i]) +
             ", cushioned bound " + fmt(bound));
  }
  out.require(fit.slope >= -0.65 && fit.slope <= -0.35,
              "log-log slope " + fmt(fit.slope) + " outside [-0.65, -0.35]");
  out.note("slope " + fmt(fit.slope) + " (theory -0.5), xi estimate " + fmt(fit.xi_estimate));
}

// ---------------------------------------------------------------------------
// 4. Maurey rate in L^1.5: slope matches 1/q' = 1 - 1/min(q,2) = -1/3.

void check_rate_l15(Outcome& out) {
  const SmoothedDensity s =
      convolve(TargetDensity::standard_gaussian(1), ParentalDensity::gaussian(1), 0.1);
  QuadratureSpec spec(Box({-13.0}, {13.0}));
  const RateFit fit = fit_rate(s, 1.5, {4, 16, 64, 256}, 50, 20240901, spec);
  out.require(fit.slope >= -0.48 && fit.slope <= -0.18,
              "log-log slope " + fmt(fit.slope) + " outside [-0.48, -0.18]");
  out.note("slope " + fmt(fit.slope) + ", bootstrap CI [" + fmt(fit.slope_ci.first) + ", " +
           fmt(fit.slope_ci.second) + "] (window centered on the worst-case theory rate -1/3)");
  for (std::size_t i = 0; i < fit.m_values.size(); ++i) {
    out.note("m=" + std::to_string(fit.m_values[i]) + ": mean error " +
             fmt(fit.mean_errors[i]));
  }
  if (!(fit.slope >= -0.48)) {
    out.note("the empirical decay sits at the CLT rate ~m^(-1/2), faster than the");
    out.note("worst-case type-1.5 guarantee m^(-1/3) this window brackets; every seed");
    out.note("tried reproduces a slope in [-0.49, -0.48], so the mixture converges");
    out.note("faster than required and the band's lower edge cannot be met honestly");
  }
}

// ---------------------------------------------------------------------------
// 5. RBM synthesis: for every m in 2..6 and ten random simplex targets each,
//    the exhaustive first-layer marginal sits within 1e-3 of the target in
//    total variation.

void check_synthesis(Outcome& out) {
  double worst_tv = 0.0;
  int worst_m = 0;
  for (int m = 2; m <= 6; ++m) {
    for (int t = 0; t < 10; ++t) {
      Rng rng(derive_seed(5, static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(t)));
      std::vector<double> alpha(static_cast<std::size_t>(m));
      double total = 0.0;
      for (double& a : alpha) {
        a = -std::log(rng.uniform01());
        total += a;
      }
      for (double& a : alpha) a /= total;

      const DiscreteDistribution target = DiscreteDistribution::on_unit_vectors(alpha);
      const SynthesisReport rep = synthesize_with_report(target, 1e-3);
      out.require(rep.rbm.visible_count == m && rep.rbm.hidden_count == m + 1,
                  "m=" + std::to_string(m) + ": layer sizes are not (m, m+1)");

      const PartitionReport part = partition_and_marginals(rep.rbm);
      double tv = 0.0;
      for (const auto& [mask, p] : part.visible_marginal) {
        tv += std::abs(target.prob(mask) - p);
      }
      tv /= 2.0;
      if (tv > worst_tv) {
        worst_tv = tv;
        worst_m = m;
      }
      out.require(tv <= 1e-3, "m=" + std::to_string(m) + " trial " + std::to_string(t) +
                                  ": total variation " + fmt(tv) + " > 1e-3");
    }
  }
  out.note("worst total variation " + fmt(worst_tv) + " (at m=" + std::to_string(worst_m) +
           ") over 50 syntheses");
}

// ---------------------------------------------------------------------------
// 6. End-to-end L2 pipeline on the standard gaussian with 64 components: the
//    triangle audit closes and the measured error is small.

void check_end_to_end_l2(Outcome& out) {
  QuadratureSpec spec(Box({-18.0}, {18.0}));
  const PipelineResult res =
      approximate_lq(TargetDensity::standard_gaussian(1), ParentalDensity::gaussian(1), 2.0,
                     64, 0.1, 42, spec);
  const ApproximationCertificate& c = res.certificate;
  out.require(c.triangle_holds, "triangle audit failed");
  out.require(c.measured_error <=
                  c.smoothing_error + c.mixture_error + c.rbm_term + c.quad_margin,
              "measured error exceeds audited stage sum");
  out.require(c.measured_error <= 0.25,
              "measured L2 error " + fmt(c.measured_error) + " > 0.25");
  out.note("measured " + fmt(c.measured_error) + " = smoothing " + fmt(c.smoothing_error) +
           " + mixture " + fmt(c.mixture_error) + " + rbm " + fmt(c.rbm_term) +
           " + quadrature margin " + fmt(c.quad_margin) + " (audited)");
  out.note("sigma " + fmt(c.sigma) + ", rbm deviation " + fmt(c.rbm_tv) + ", deficiency " +
           fmt(c.deficiency));
}

// ---------------------------------------------------------------------------
// 7. Certified KL decay on [0,1] with the truncated-exponential kernel: the
//    bound holds for every trial and the mean KL falls roughly like 1/m.

void check_kl_rate(Outcome& out) {
  const ParentalDensity te = ParentalDensity::truncated_exponential({1.0}, {1.0});
  const TargetDensity target = TargetDensity::from_parental(te);
  QuadratureSpec spec(Box({0.0}, {1.0}));
  const std::vector<std::size_t> ms = {8, 16, 32, 64};

  std::vector<double> md, kls;
  for (const std::size_t m : ms) {
    const KlResult res = approximate_kl(target, te, m, spec, derive_seed(7, m, 0), 1024, 48);
    const KlCertificate& c = res.certificate;
    out.require(c.bound_holds && c.kl <= c.paper_bound,
                "m=" + std::to_string(m) + ": KL " + fmt(c.kl) + " above bound " +
                    fmt(c.paper_bound));
    out.require(c.min_density >= c.eta / 2.0,
                "m=" + std::to_string(m) + ": density floor " + fmt(c.min_density) +
                    " below eta/2");
    md.push_back(static_cast<double>(m));
    kls.push_back(c.kl);
    out.note("m=" + std::to_string(m) + ": KL " + fmt(c.kl) + " <= bound " +
             fmt(c.paper_bound) + ", floor " + fmt(c.min_density));
  }
  const double slope = ls_slope(md, kls);
  out.require(slope >= -1.4 && slope <= -0.6,
              "log-log KL slope " + fmt(slope) + " outside [-1.4, -0.6]");
  out.note("slope " + fmt(slope) + " (theory -1)");
}

// ---------------------------------------------------------------------------
// 8. The KL vs squared-L2 comparison on random piecewise-constant pairs.

void check_kl_l2_bound(Outcome& out) {
  QuadratureSpec spec = QuadratureSpec(Box({0.0}, {1.0})).with_points(1280);
  Rng rng(8080);
  double worst_margin = std::numeric_limits<double>::infinity();
  for (int pair = 0; pair < 100; ++pair) {
    const auto draw_bins = [&rng]() {
      std::vector<double> w(8);
      double total = 0.0;
      for (double& x : w) {
        x = -std::log(rng.uniform01());
        total += x;
      }
      std::vector<double> bins(8);
      for (int i = 0; i < 8; ++i) bins[static_cast<std::size_t>(i)] = 0.1 + 7.2 * w[static_cast<std::size_t>(i)] / total;
      return bins;
    };
    const std::vector<double> fb = draw_bins();
    const std::vector<double> gb = draw_bins();
    const auto step = [](std::vector<double> bins) {
      return [bins = std::move(bins)](std::span<const double> x) {
        if (x[0] < 0.0 || x[0] > 1.0) return 0.0;
        const int i = std::min(7, static_cast<int>(x[0] * 8.0));
        return bins[static_cast<std::size_t>(i)];
      };
    };
    // eta is the construction floor shared by both densities.
    const KlBoundCheck check = kl_l2_bound_check(step(fb), step(gb), 0.1, spec);
    const double margin = check.bound + 1e-6 - check.kl;
    worst_margin = std::min(worst_margin, margin);
    out.require(check.kl <= check.bound + 1e-6,
                "pair " + std::to_string(pair) + ": KL " + fmt(check.kl) +
                    " above (1/eta)||f-g||^2 + 1e-6 = " + fmt(check.bound + 1e-6));
  }
  out.note("100 random pairs checked, worst slack " + fmt(worst_margin));
}

// ---------------------------------------------------------------------------
// 9. The L2/KL-vs-sup separation sequence: normalized exactly, shrinking in
//    L2 and KL, sup gap bounded away from zero, with the m=2 constant hit
//    exactly.

void check_counterexample(Outcome& out) {
  QuadratureSpec spec = QuadratureSpec(Box({0.0}, {1.0})).with_points(1280);
  const std::vector<std::size_t> ms = {1, 2, 4, 8, 16, 32, 64};
  const auto rows = counterexample_demo(ms, spec);

  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    out.require(std::abs(row.integral - 1.0) <= 1e-8,
                "m=" + std::to_string(row.m) + ": mass " + fmt(row.integral) +
                    " off unity by more than 1e-8");
    out.require(row.sup_gap >= 0.4,
                "m=" + std::to_string(row.m) + ": sup gap " + fmt(row.sup_gap) + " < 0.4");
    if (i > 0) {
      out.require(row.l2 < rows[i - 1].l2, "L2 error not strictly decreasing at m=" +
                                               std::to_string(row.m));
      out.require(row.kl < rows[i - 1].kl, "KL not strictly decreasing at m=" +
                                               std::to_string(row.m));
    }
  }
  out.require(rows.back().l2 < 0.05, "final L2 error " + fmt(rows.back().l2) + " >= 0.05");
  out.require(rows.back().kl < 0.01, "final KL " + fmt(rows.back().kl) + " >= 0.01");
  out.require(rows[1].c_m == 16.0 / 15.0,
              "normalizing constant at m=2 is " + fmt(rows[1].c_m) + ", expected 16/15");
  out.note("L2 " + fmt(rows.front().l2) + " -> " + fmt(rows.back().l2) + ", KL " +
           fmt(rows.front().kl) + " -> " + fmt(rows.back().kl) + ", min sup gap >= 0.4");
}

// ---------------------------------------------------------------------------
// 10. Determinism: reruns are byte-identical even across worker counts, and
//     model files round-trip bit-exactly.

void check_determinism(Outcome& out) {
  const fs::path dir = scratch_dir("determinism");

  // One small config per experiment; each runs twice under different worker
  // counts and every written file must come back byte-identical.
  using KV = std::vector<std::pair<std::string, std::string>>;
  const std::vector<std::pair<std::string, KV>> experiments = {
      {"norms", {{"parent", "gaussian 1"}, {"q_values", "1 2 4"}}},
      {"rate",
       {{"target", "standard_gaussian 1"},
        {"parent", "gaussian 1"},
        {"q", "2"},
        {"sigma", "0.25"},
        {"m_values", "4 16"},
        {"trials", "5"}}},
      {"kl_rate",
       {{"target", "from_parental"},
        {"parent", "truncated_exponential 1 1 1"},
        {"m_values", "8"},
        {"greedy_iterations", "16"}}},
      {"approximate",
       {{"target", "standard_gaussian 1"},
        {"parent", "gaussian 1"},
        {"q", "2"},
        {"m", "8"},
        {"epsilon", "0.9"},
        {"greedy_iterations", "8"},
        {"network_out", (dir / "model.dbn").string()}}},
      {"synthesize_rbm", {{"m", "4"}, {"trials", "2"}, {"epsilon", "0.001"}}},
      {"counterexample", {{"m_values", "1 2 4 8"}}},
      {"eval", {{"network", (dir / "model.dbn").string()}, {"target", "standard_gaussian 1"}}},
  };

  for (const auto& [name, extra] : experiments) {
    ExperimentConfig cfg;
    cfg.set("experiment", name);
    cfg.set("seed", "11");
    cfg.set("output", (dir / (name + ".csv")).string());
    for (const auto& [k, v] : extra) cfg.set(k, v);

    set_worker_count(1);
    const RunOutcome first = run(cfg);
    std::vector<std::string> bytes1;
    for (const std::string& f : first.files_written) bytes1.push_back(slurp(f));

    set_worker_count(3);
    const RunOutcome second = run(cfg);
    set_worker_count(1);
    std::vector<std::string> bytes2;
    for (const std::string& f : second.files_written) bytes2.push_back(slurp(f));

    out.require(first.exit_code == 0 && second.exit_code == 0,
                name + ": run reported failures");
    out.require(first.files_written == second.files_written,
                name + ": file lists differ between reruns");
    bool same = bytes1.size() == bytes2.size() && !bytes1.empty();
    for (std::size_t i = 0; same && i < bytes1.size(); ++i) {
      same = !bytes1[i].empty() && bytes1[i] == bytes2[i];
    }
    out.require(same, name + ": output bytes differ between reruns");
  }

  // Model files: serialize -> parse -> serialize is the identity, and the
  // parsed copy evaluates bit-identically.
  const MixtureModel mix{{0.125, 0.25, 0.125, 0.5},
                         {-1.5, -0.25, 0.5, 1.75},
                         0.3,
                         ParentalDensity::gaussian(1)};
  const BinaryRBM rbm = synthesize(DiscreteDistribution::on_unit_vectors(mix.weights), 1e-6);
  out.require(BinaryRBM::parse(rbm.serialize()).serialize() == rbm.serialize(),
              "RBM text form does not round-trip bit-exactly");

  const DeepBeliefNetwork dbn = assemble(mix, rbm);
  const DeepBeliefNetwork back = DeepBeliefNetwork::parse(dbn.serialize());
  out.require(back.serialize() == dbn.serialize(),
              "network text form does not round-trip bit-exactly");
  bool eval_same = true;
  for (const double x : {-2.0, -0.25, 0.0, 0.6, 1.75, 3.1}) {
    const double v[] = {x};
    eval_same = eval_same && back.eval_visible(v) == dbn.eval_visible(v);
  }
  out.require(eval_same, "parsed network evaluates differently");
  out.note("all seven experiments reproduced byte-for-byte across worker counts");
}

struct Criterion {
  int id;
  const char* name;
  double limit_seconds;
  std::function<void(Outcome&)> fn;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> table = {
      {1, "closed-form norms vs quadrature", 10.0, check_norms},
      {2, "interpolation constant values", 1.0, check_upsilon},
      {3, "maurey rate in L2", 300.0, check_rate_l2},
      {4, "maurey rate in L1.5", 300.0, check_rate_l15},
      {5, "rbm synthesis total variation", 120.0, check_synthesis},
      {6, "end-to-end L2 certificate", 180.0, check_end_to_end_l2},
      {7, "certified KL decay", 300.0, check_kl_rate},
      {8, "KL vs squared-L2 comparison", 30.0, check_kl_l2_bound},
      {9, "sup-norm separation sequence", 30.0, check_counterexample},
      {10, "byte-identical reruns and round-trips", 60.0, check_determinism},
  };
  return table;
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::cerr << "usage: acceptance [--only N]\n";
      return 2;
    }
  }

  int failures = 0;
  int ran = 0;
  for (const Criterion& c : criteria()) {
    if (only != 0 && c.id != only) continue;
    ++ran;
    Outcome out;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.fn(out);
    } catch (const std::exception& e) {
      out.passed = false;
      out.notes.push_back(std::string("FAILED: unexpected exception: ") + e.what());
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (elapsed > c.limit_seconds) {
      out.passed = false;
      out.notes.push_back("FAILED: runtime " + fmt(elapsed) + "s over the " +
                          fmt(c.limit_seconds) + "s budget");
    }

    std::cout << (out.passed ? "[PASS] " : "[FAIL] ") << "C" << c.id << " " << c.name << " ("
              << fmt(elapsed) << "s / " << fmt(c.limit_seconds) << "s)\n";
    for (const std::string& n : out.notes) {
      if (!out.passed || n.rfind("FAILED:", 0) != 0) std::cout << "       " << n << "\n";
    }
    if (!out.passed) ++failures;
  }

  if (ran == 0) {
    std::cerr << "no criterion matches --only " << only << "\n";
    return 2;
  }
  std::cout << (failures == 0 ? "acceptance: all criteria passed"
                              : "acceptance: " + std::to_string(failures) + " criterion(s) failed")
            << " (" << ran - failures << "/" << ran << ")\n";
  return failures == 0 ? 0 : 1;
}
