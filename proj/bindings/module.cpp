#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dbnapprox/binary_rbm.hpp"
#include "dbnapprox/dbn.hpp"
#include "dbnapprox/densities.hpp"
#include "dbnapprox/harness.hpp"
#include "dbnapprox/metrics.hpp"
#include "dbnapprox/mixture.hpp"

namespace py = pybind11;
using namespace dbnapprox;

namespace {

QuadratureSpec make_spec(const std::vector<double>& lo, const std::vector<double>& hi,
                         int points, const std::string& rule) {
  if (lo.size() != hi.size() || lo.empty())
    throw PreconditionError("domain lo/hi must be nonempty and the same length");
  QuadratureSpec spec;
  spec.domain = Box{lo, hi};
  spec.points_per_axis = points;
  if (rule == "midpoint") {
    spec.rule = QuadratureRule::midpoint;
  } else if (rule == "gauss_legendre") {
    spec.rule = QuadratureRule::gauss_legendre_composite;
  } else {
    throw PreconditionError("rule must be 'midpoint' or 'gauss_legendre'");
  }
  return spec;
}

py::dict certificate_dict(const ApproximationCertificate& c) {
  py::dict d;
  d["q"] = c.q;
  d["measured_error"] = c.measured_error;
  d["paper_bound"] = c.paper_bound;
  d["m"] = c.m;
  d["sigma"] = c.sigma;
  d["smoothing_error"] = c.smoothing_error;
  d["mixture_error"] = c.mixture_error;
  d["rbm_tv"] = c.rbm_tv;
  d["deficiency"] = c.deficiency;
  d["rbm_term"] = c.rbm_term;
  d["quad_margin"] = c.quad_margin;
  d["triangle_holds"] = c.triangle_holds;
  return d;
}

py::dict pipeline_dict(const PipelineResult& r) {
  py::dict d = certificate_dict(r.certificate);
  d["network"] = r.dbn.serialize();
  return d;
}

TargetDensity resolve_target(const std::string& target_spec, const std::string& parent_spec) {
  if (parent_spec.empty()) return parse_target_spec(target_spec, nullptr);
  const ParentalDensity parent = parse_parent_spec(parent_spec);
  return parse_target_spec(target_spec, &parent);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "deep belief network approximation toolkit";

  m.def("upsilon", &upsilon, py::arg("q"),
        "Maurey constant for exponent q, computed by quadrature");

  m.def(
      "parent_norm",
      [](const std::string& spec, double q) {
        const ParentalDensity p = parse_parent_spec(spec);
        return p.lq_norm(q);
      },
      py::arg("spec"), py::arg("q"), "closed-form Lq norm of a parental kernel");

  m.def(
      "approximate_lq",
      [](const std::string& target, const std::string& parent, double q, std::size_t m,
         double epsilon, std::uint64_t seed, const std::vector<double>& lo,
         const std::vector<double>& hi, int points, bool greedy, int greedy_iterations) {
        const ParentalDensity p = parse_parent_spec(parent);
        const TargetDensity f = parse_target_spec(target, &p);
        const QuadratureSpec spec = make_spec(lo, hi, points, "gauss_legendre");
        return pipeline_dict(
            approximate_lq(f, p, q, m, epsilon, seed, spec, greedy, greedy_iterations));
      },
      py::arg("target"), py::arg("parent"), py::arg("q"), py::arg("m"), py::arg("epsilon"),
      py::arg("seed"), py::arg("lo"), py::arg("hi"), py::arg("points") = 512,
      py::arg("greedy") = true, py::arg("greedy_iterations") = 48,
      "build a network approximating the target in Lq and return its certificate");

  m.def(
      "approximate_sup",
      [](const std::string& target, const std::string& parent, double epsilon,
         std::uint64_t seed, const std::vector<double>& lo, const std::vector<double>& hi,
         int points, std::size_t m_cap, int greedy_iterations) {
        const ParentalDensity p = parse_parent_spec(parent);
        const TargetDensity f = parse_target_spec(target, &p);
        const QuadratureSpec spec = make_spec(lo, hi, points, "gauss_legendre");
        return pipeline_dict(approximate_sup(f, p, epsilon, seed, spec, m_cap, greedy_iterations));
      },
      py::arg("target"), py::arg("parent"), py::arg("epsilon"), py::arg("seed"), py::arg("lo"),
      py::arg("hi"), py::arg("points") = 512, py::arg("m_cap") = 1024,
      py::arg("greedy_iterations") = 48,
      "grow a network until the sup-norm error drops below epsilon");

  m.def(
      "approximate_kl",
      [](const std::string& target, const std::string& parent, std::size_t m,
         std::uint64_t seed, const std::vector<double>& lo, const std::vector<double>& hi,
         int points, std::size_t m_cap, int greedy_iterations) {
        const ParentalDensity p = parse_parent_spec(parent);
        const TargetDensity f = parse_target_spec(target, &p);
        const QuadratureSpec spec = make_spec(lo, hi, points, "gauss_legendre");
        const KlResult r = approximate_kl(f, p, m, spec, seed, m_cap, greedy_iterations);
        py::dict d;
        d["kl"] = r.certificate.kl;
        d["paper_bound"] = r.certificate.paper_bound;
        d["m"] = r.certificate.m;
        d["m_requested"] = r.certificate.m_requested;
        d["sup_floor_m"] = r.certificate.sup_floor_m;
        d["eta"] = r.certificate.eta;
        d["sigma"] = r.certificate.sigma;
        d["min_density"] = r.certificate.min_density;
        d["l2_error"] = r.certificate.l2_error;
        d["bound_holds"] = r.certificate.bound_holds;
        d["network"] = r.dbn.serialize();
        return d;
      },
      py::arg("target"), py::arg("parent"), py::arg("m"), py::arg("seed"), py::arg("lo"),
      py::arg("hi"), py::arg("points") = 512, py::arg("m_cap") = 1024,
      py::arg("greedy_iterations") = 48,
      "build a network whose relative entropy from the target satisfies the certificate");

  m.def(
      "synthesize_rbm",
      [](const std::vector<double>& weights, double tolerance) {
        const SynthesisReport rep =
            synthesize_with_report(DiscreteDistribution::on_unit_vectors(weights), tolerance);
        py::dict d;
        d["rbm"] = rep.rbm.serialize();
        d["deviation"] = rep.achieved_deviation;
        d["sharpness"] = rep.sharpness;
        d["used_descent"] = rep.used_descent;
        d["unit_probs"] = rep.marginals.unit_probs;
        d["deficiency"] = rep.marginals.deficiency;
        d["max_non_unit"] = rep.marginals.max_non_unit;
        return d;
      },
      py::arg("weights"), py::arg("tolerance") = 1e-3,
      "binary network whose first-layer marginal puts the given masses on unit vectors");

  m.def(
      "rbm_unit_marginals",
      [](const std::string& text) {
        const UnitMarginals um = unit_vector_marginals(BinaryRBM::parse(text));
        py::dict d;
        d["unit_probs"] = um.unit_probs;
        d["deficiency"] = um.deficiency;
        d["max_non_unit"] = um.max_non_unit;
        return d;
      },
      py::arg("rbm_text"), "first-layer marginal masses of a serialized binary network");

  m.def(
      "network_info",
      [](const std::string& text) {
        const DeepBeliefNetwork dbn = DeepBeliefNetwork::parse(text);
        py::dict d;
        d["m"] = dbn.component_count();
        d["dim"] = dbn.dim();
        d["sigma"] = dbn.sigma();
        d["deficiency"] = dbn.deficiency();
        d["parent"] = dbn.parent().serialize();
        d["unit_probs"] = dbn.unit_probs();
        return d;
      },
      py::arg("network_text"), "summary of a serialized network");

  m.def(
      "network_eval",
      [](const std::string& text, const std::vector<std::vector<double>>& points) {
        const DeepBeliefNetwork dbn = DeepBeliefNetwork::parse(text);
        std::vector<double> out;
        out.reserve(points.size());
        for (const std::vector<double>& x : points) {
          if (static_cast<int>(x.size()) != dbn.dim())
            throw PreconditionError("network_eval: point dimension mismatch");
          out.push_back(dbn.eval_visible(x));
        }
        return out;
      },
      py::arg("network_text"), py::arg("points"),
      "visible density of a serialized network at the given points");

  m.def(
      "network_sample",
      [](const std::string& text, std::uint64_t seed, std::size_t count) {
        const DeepBeliefNetwork dbn = DeepBeliefNetwork::parse(text);
        const std::vector<double> flat = dbn.sample_visible(seed, count);
        const std::size_t d = static_cast<std::size_t>(dbn.dim());
        std::vector<std::vector<double>> out(count);
        for (std::size_t i = 0; i < count; ++i)
          out[i].assign(flat.begin() + static_cast<std::ptrdiff_t>(i * d),
                        flat.begin() + static_cast<std::ptrdiff_t>((i + 1) * d));
        return out;
      },
      py::arg("network_text"), py::arg("seed"), py::arg("count"),
      "draw visible samples from a serialized network");

  m.def(
      "network_roundtrip",
      [](const std::string& text) { return DeepBeliefNetwork::parse(text).serialize(); },
      py::arg("network_text"), "parse and re-serialize a network");

  m.def(
      "measure",
      [](const std::string& network_text, const std::string& target,
         const std::string& parent, const std::string& kind, const std::vector<double>& lo,
         const std::vector<double>& hi, int points) {
        const DeepBeliefNetwork dbn = DeepBeliefNetwork::parse(network_text);
        const TargetDensity f = resolve_target(target, parent);
        const QuadratureSpec spec = make_spec(lo, hi, points, "gauss_legendre");
        DistanceReport rep;
        if (kind == "sup") rep = sup_distance(f.fn(), dbn.visible_fn(), spec);
        else if (kind == "kl") rep = kl_divergence(f.fn(), dbn.visible_fn(), spec);
        else if (kind == "l1") rep = lq_distance(f.fn(), dbn.visible_fn(), 1.0, spec);
        else if (kind == "l2") rep = lq_distance(f.fn(), dbn.visible_fn(), 2.0, spec);
        else throw PreconditionError("kind must be one of l1, l2, sup, kl");
        py::dict d;
        d["value"] = rep.value;
        d["error_estimate"] = rep.error_estimate;
        return d;
      },
      py::arg("network_text"), py::arg("target"), py::arg("parent"), py::arg("kind"),
      py::arg("lo"), py::arg("hi"), py::arg("points") = 512,
      "distance between a target density and a serialized network");

  m.def(
      "counterexample",
      [](const std::vector<std::size_t>& m_values, int points) {
        const QuadratureSpec spec =
            make_spec({0.0}, {1.0}, points, "gauss_legendre");
        py::list rows;
        for (const CounterexampleRow& r : counterexample_demo(m_values, spec)) {
          py::dict d;
          d["m"] = r.m;
          d["c_m"] = r.c_m;
          d["integral"] = r.integral;
          d["l2"] = r.l2;
          d["kl"] = r.kl;
          d["sup_gap"] = r.sup_gap;
          rows.append(d);
        }
        return rows;
      },
      py::arg("m_values"), py::arg("points") = 1280,
      "ramp family rows: dense in L2 and relative entropy, never in sup norm");

  m.def(
      "run_config",
      [](const std::string& text, const std::string& origin) {
        const ExperimentConfig config = ExperimentConfig::parse_text(text, origin);
        const RunOutcome out = run(config);
        py::dict d;
        d["exit_code"] = out.exit_code;
        d["files"] = out.files_written;
        d["failed_rows"] = out.failed_rows;
        return d;
      },
      py::arg("config_text"), py::arg("origin") = std::string("<python>"),
      "run one experiment config and write its outputs");
}
