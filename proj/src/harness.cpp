#include "dbnapprox/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <utility>

#include "dbnapprox/binary_rbm.hpp"
#include "dbnapprox/dbn.hpp"
#include "dbnapprox/errors.hpp"
#include "dbnapprox/mixture.hpp"
#include "dbnapprox/parallel.hpp"
#include "dbnapprox/rng.hpp"
#include "dbnapprox/smoothing.hpp"
#include "dbnapprox/summation.hpp"
#include "dbnapprox/textio.hpp"

namespace dbnapprox {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

constexpr const char* kCsvSchema = "# dbnapprox-csv v1";
constexpr const char* kCsvHeader =
    "experiment,m,trial,seed,q,sigma,error,bound,status,detail,config_hash";
constexpr const char* kCounterSchema = "# dbnapprox-counterexample-csv v1";
constexpr const char* kCounterHeader = "m,c_m,integral,l2_error,kl,sup_gap,config_hash";

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

double parse_q_value(const std::string& tok) {
  if (tok == "inf" || tok == "infinity") return kInf;
  return parse_double(tok);
}

std::string hash_hex(std::uint64_t h) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

std::string csv_quote(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 2);
  out += '"';
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else if (c == '\n') out += ' ';
    else out += c;
  }
  out += '"';
  return out;
}

void atomic_write(const std::string& path, const std::string& content) {
  const std::filesystem::path target(path);
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  const std::filesystem::path tmp = target.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw ResourceError("cannot open '" + tmp.string() + "' for writing");
    os << content;
    if (!os.flush()) throw ResourceError("write to '" + tmp.string() + "' failed");
  }
  std::filesystem::rename(tmp, target);
}

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw PreconditionError("cannot open '" + path + "'");
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

// One output row in the shared CSV schema. The error/bound pair means
// different things per experiment; the README documents each.
struct Row {
  std::string experiment;
  long long m = 0;
  long long trial = 0;
  std::uint64_t seed = 0;
  double q = 0.0;
  double sigma = 0.0;
  double error = kNan;
  double bound = kNan;
  std::string status = "ok";
  std::string detail;
};

std::string render_rows(const std::vector<Row>& rows, const std::string& hash) {
  std::ostringstream os;
  os << kCsvSchema << '\n' << kCsvHeader << '\n';
  for (const Row& r : rows) {
    os << r.experiment << ',' << r.m << ',' << r.trial << ',' << r.seed << ','
       << format_double(r.q) << ',' << format_double(r.sigma) << ',' << format_double(r.error)
       << ',' << format_double(r.bound) << ',' << r.status << ',' << csv_quote(r.detail) << ','
       << hash << '\n';
  }
  return os.str();
}

Box minkowski_sum_box(const Box& target, const Box& kernel) {
  Box out = target;
  for (std::size_t k = 0; k < out.lo.size(); ++k) {
    out.lo[k] += std::min(0.0, kernel.lo[k]);
    out.hi[k] += std::max(0.0, kernel.hi[k]);
  }
  return out;
}

struct Resolved {
  std::optional<ParentalDensity> parent;
  std::optional<TargetDensity> target;
  QuadratureSpec spec;
};

// Explicit domain wins; otherwise the experiment decides: the KL experiments
// work on the target's own box (that is the Omega the bounds talk about),
// everything else pads the target box by the kernel box so mixtures with
// sigma <= 1 stay inside.
Resolved resolve(const ExperimentConfig& config) {
  Resolved r;
  if (!config.parent_spec.empty()) r.parent = parse_parent_spec(config.parent_spec);
  if (!config.target_spec.empty())
    r.target = parse_target_spec(config.target_spec, r.parent ? &*r.parent : nullptr);
  r.spec = config.quadrature;
  if (config.domain_set) return r;
  switch (config.experiment) {
    case Experiment::counterexample:
    case Experiment::synthesize_rbm:  // purely discrete, no quadrature involved
      r.spec.domain = Box::cube(1, 0.0, 1.0);
      break;
    case Experiment::kl_rate: {
      if (!r.target || !r.target->support_hint())
        throw PreconditionError("kl_rate: no domain given and the target has no support box");
      r.spec.domain = *r.target->support_hint();
      break;
    }
    case Experiment::norms:
      if (!r.parent) throw PreconditionError("norms: parent required");
      r.spec.domain = r.parent->support_box();
      break;
    case Experiment::eval:
      break;  // derived from the network after loading
    default: {
      if (!r.target || !r.target->support_hint() || !r.parent)
        throw PreconditionError(std::string(experiment_name(config.experiment)) +
                                ": no domain given and none derivable from the densities");
      r.spec.domain = minkowski_sum_box(*r.target->support_hint(), r.parent->support_box());
      break;
    }
  }
  return r;
}

std::vector<std::size_t> sorted_unique(std::vector<std::size_t> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

std::string describe_error(const std::exception& ex) {
  return std::string("error: ") + ex.what();
}

// Mean over the ok rows of one m block, plus a summary row at trial -1.
Row summarize_block(const std::vector<Row>& block, const std::string& experiment,
                    long long m, double q) {
  Row s;
  s.experiment = experiment;
  s.m = m;
  s.trial = -1;
  s.q = q;
  PairwiseAccumulator err, bnd, sig;
  std::size_t ok = 0;
  for (const Row& r : block) {
    if (r.status != "ok") continue;
    err.add(r.error);
    bnd.add(r.bound);
    sig.add(r.sigma);
    ++ok;
  }
  std::ostringstream d;
  d << "trials=" << block.size() << " failed=" << block.size() - ok;
  s.detail = d.str();
  if (ok == 0) {
    s.status = "failed";
    return s;
  }
  const double n = static_cast<double>(ok);
  s.status = "summary";
  s.error = err.total() / n;
  s.bound = bnd.total() / n;
  s.sigma = sig.total() / n;
  return s;
}

std::vector<Row> run_norms(const ExperimentConfig& config, const Resolved& r) {
  const ParentalDensity& parent = *r.parent;
  std::vector<double> qs = config.q_values;
  if (qs.empty()) qs = {1.0, 1.5, 2.0, 3.0, 4.0};
  const DensityFn zero = [](std::span<const double>) { return 0.0; };

  std::vector<Row> rows;
  for (const double q : qs) {
    const double closed = parent.lq_norm(q);
    const DistanceReport quad = std::isinf(q)
                                    ? sup_distance(parent.fn(), zero, r.spec)
                                    : lq_distance(parent.fn(), zero, q, r.spec);
    Row row;
    row.experiment = experiment_name(config.experiment);
    row.m = parent.dim();
    row.seed = config.seed;
    row.q = q;
    row.sigma = 1.0;
    row.error = std::abs(closed - quad.value);
    row.bound = 3.0 * quad.error_estimate;
    const double quoted = parent.family() == Family::gaussian
                              ? ParentalDensity::gaussian_quoted_lq_form(parent.dim(), q)
                              : closed;
    std::ostringstream d;
    d << "kind=norm closed=" << format_double(closed) << " quadrature="
      << format_double(quad.value) << " quoted=" << format_double(quoted);
    row.detail = d.str();
    rows.push_back(row);

    Row up;
    up.experiment = row.experiment;
    up.m = 0;
    up.seed = config.seed;
    up.q = q;
    up.sigma = 1.0;
    up.error = upsilon(q);
    up.bound = upsilon_quoted_form(q);
    up.detail = "kind=upsilon quoted form reported for cross-reference, not asserted";
    rows.push_back(up);
  }
  return rows;
}

std::vector<Row> run_rate(const ExperimentConfig& config, const Resolved& r) {
  const TargetDensity& target = *r.target;
  const ParentalDensity& parent = *r.parent;
  const SmoothedDensity smoothed = convolve(target, parent, config.sigma);
  const int d = target.dim();
  const double scale_norm = lq_scale_factor(config.sigma, d, config.q) * parent.lq_norm(config.q);
  const double ups = upsilon(config.q);
  const double rate_exp = 1.0 / std::min(config.q, 2.0) - 1.0;
  const auto closed_bound = [&](std::size_t m) {
    return 2.0 * ups * scale_norm * std::pow(static_cast<double>(m), rate_exp);
  };

  const std::vector<std::size_t> ms = sorted_unique(config.m_values);
  struct Job {
    std::size_t m;
    std::size_t trial;
  };
  std::vector<Job> jobs;
  for (const std::size_t m : ms)
    for (std::size_t t = 0; t < config.trials; ++t) jobs.push_back({m, t});

  std::vector<Row> results(jobs.size());
  for_chunks(jobs.size(), 1, [&](std::size_t b, std::size_t e, std::size_t) {
    for (std::size_t j = b; j < e; ++j) {
      const Job& job = jobs[j];
      Row row;
      row.experiment = experiment_name(config.experiment);
      row.m = static_cast<long long>(job.m);
      row.trial = static_cast<long long>(job.trial);
      row.seed = derive_seed(config.seed, job.m, job.trial);
      row.q = config.q;
      row.sigma = config.sigma;
      row.bound = closed_bound(job.m);
      try {
        const MixtureModel mixture = maurey_sample(smoothed, job.m, row.seed);
        row.error = lq_distance(smoothed.fn(), mixture.fn(), config.q, r.spec).value;
      } catch (const std::exception& ex) {
        row.status = "failed";
        row.detail = describe_error(ex);
        row.error = kNan;
      }
      results[j] = row;
    }
  });

  std::vector<Row> rows;
  std::size_t at = 0;
  for (const std::size_t m : ms) {
    std::vector<Row> block(results.begin() + static_cast<std::ptrdiff_t>(at),
                           results.begin() + static_cast<std::ptrdiff_t>(at + config.trials));
    rows.push_back(summarize_block(block, experiment_name(config.experiment),
                                   static_cast<long long>(m), config.q));
    rows.back().sigma = config.sigma;
    rows.back().bound = closed_bound(m);
    for (Row& b : block) rows.push_back(std::move(b));
    at += config.trials;
  }
  return rows;
}

std::vector<Row> run_kl_rate(const ExperimentConfig& config, const Resolved& r) {
  const TargetDensity& target = *r.target;
  const ParentalDensity& parent = *r.parent;
  const std::vector<std::size_t> ms = sorted_unique(config.m_values);

  struct Job {
    std::size_t m;
    std::size_t trial;
  };
  std::vector<Job> jobs;
  for (const std::size_t m : ms)
    for (std::size_t t = 0; t < config.trials; ++t) jobs.push_back({m, t});

  std::vector<Row> results(jobs.size());
  for_chunks(jobs.size(), 1, [&](std::size_t b, std::size_t e, std::size_t) {
    for (std::size_t j = b; j < e; ++j) {
      const Job& job = jobs[j];
      Row row;
      row.experiment = experiment_name(config.experiment);
      row.m = static_cast<long long>(job.m);
      row.trial = static_cast<long long>(job.trial);
      row.seed = derive_seed(config.seed, job.m, job.trial);
      row.q = 2.0;
      try {
        const KlResult res = approximate_kl(target, parent, job.m, r.spec, row.seed, 1024,
                                            config.greedy_iterations);
        const KlCertificate& c = res.certificate;
        row.sigma = c.sigma;
        row.error = c.kl;
        row.bound = c.paper_bound;
        std::ostringstream d;
        d << "m_used=" << c.m << " sup_floor_m=" << c.sup_floor_m << " eta="
          << format_double(c.eta) << " min_density=" << format_double(c.min_density)
          << " l2=" << format_double(c.l2_error) << " bound_holds=" << (c.bound_holds ? 1 : 0);
        row.detail = d.str();
        if (!c.bound_holds) row.status = "failed";
      } catch (const std::exception& ex) {
        row.status = "failed";
        row.detail = describe_error(ex);
      }
      results[j] = row;
    }
  });

  std::vector<Row> rows;
  std::size_t at = 0;
  for (const std::size_t m : ms) {
    std::vector<Row> block(results.begin() + static_cast<std::ptrdiff_t>(at),
                           results.begin() + static_cast<std::ptrdiff_t>(at + config.trials));
    rows.push_back(summarize_block(block, experiment_name(config.experiment),
                                   static_cast<long long>(m), 2.0));
    for (Row& b : block) rows.push_back(std::move(b));
    at += config.trials;
  }
  return rows;
}

std::string certificate_detail(const ApproximationCertificate& c) {
  std::ostringstream d;
  d << "smoothing=" << format_double(c.smoothing_error) << " mixture="
    << format_double(c.mixture_error) << " rbm_term=" << format_double(c.rbm_term)
    << " rbm_tv=" << format_double(c.rbm_tv) << " deficiency=" << format_double(c.deficiency)
    << " quad_margin=" << format_double(c.quad_margin) << " triangle_holds="
    << (c.triangle_holds ? 1 : 0);
  return d.str();
}

std::vector<Row> run_approximate(const ExperimentConfig& config, const Resolved& r,
                                 std::vector<std::string>& files) {
  const TargetDensity& target = *r.target;
  const ParentalDensity& parent = *r.parent;
  Row row;
  row.experiment = experiment_name(config.experiment);
  row.m = static_cast<long long>(config.m);
  row.seed = config.seed;
  row.q = config.q;
  try {
    const PipelineResult res =
        std::isinf(config.q)
            ? approximate_sup(target, parent, config.epsilon, config.seed, r.spec, config.m,
                              config.greedy_iterations)
            : approximate_lq(target, parent, config.q, config.m, config.epsilon, config.seed,
                             r.spec, config.greedy, config.greedy_iterations);
    const ApproximationCertificate& c = res.certificate;
    row.m = static_cast<long long>(c.m);
    row.sigma = c.sigma;
    row.error = c.measured_error;
    row.bound = c.paper_bound;
    row.detail = certificate_detail(c);
    if (!c.triangle_holds) row.status = "failed";
    if (!config.network_out.empty()) {
      atomic_write(config.network_out, res.dbn.serialize());
      files.push_back(config.network_out);
    }
  } catch (const std::exception& ex) {
    row.status = "failed";
    row.detail = describe_error(ex);
  }
  return {row};
}

std::vector<Row> run_synthesize(const ExperimentConfig& config) {
  const double tolerance = config.epsilon > 0.0 ? config.epsilon : 1e-3;
  std::vector<Row> results(config.trials);
  for_chunks(config.trials, 1, [&](std::size_t b, std::size_t e, std::size_t) {
    for (std::size_t t = b; t < e; ++t) {
      Row row;
      row.experiment = experiment_name(config.experiment);
      row.m = static_cast<long long>(config.m);
      row.trial = static_cast<long long>(t);
      row.seed = derive_seed(config.seed, config.m, t);
      row.q = 1.0;  // deviations are total-variation style
      row.bound = tolerance;
      try {
        Rng rng(row.seed);
        std::vector<double> weights(config.m);
        double total = 0.0;
        for (double& w : weights) {
          w = -std::log(rng.uniform01());
          total += w;
        }
        for (double& w : weights) w /= total;

        const SynthesisReport rep =
            synthesize_with_report(DiscreteDistribution::on_unit_vectors(weights), tolerance);
        // Re-measure the marginal independently of what synthesis reported.
        const UnitMarginals um = unit_vector_marginals(rep.rbm);
        double dev = um.max_non_unit;
        for (std::size_t i = 0; i < weights.size(); ++i)
          dev = std::max(dev, std::abs(weights[i] - um.unit_probs[i]));
        row.sigma = rep.sharpness;
        row.error = dev;
        std::ostringstream d;
        d << "used_descent=" << (rep.used_descent ? 1 : 0) << " deficiency="
          << format_double(um.deficiency);
        row.detail = d.str();
        if (dev > tolerance) row.status = "failed";
      } catch (const std::exception& ex) {
        row.status = "failed";
        row.detail = describe_error(ex);
      }
      results[t] = row;
    }
  });
  std::vector<Row> rows;
  rows.push_back(summarize_block(results, experiment_name(config.experiment),
                                 static_cast<long long>(config.m), 1.0));
  rows.back().bound = tolerance;
  for (Row& r : results) rows.push_back(std::move(r));
  return rows;
}

std::vector<Row> run_eval(const ExperimentConfig& config, Resolved& r,
                          std::vector<std::string>&) {
  const DeepBeliefNetwork dbn = DeepBeliefNetwork::parse(read_file(config.network_in));
  if (!config.domain_set) {
    Box dom = dbn.support_box();
    if (r.target && r.target->support_hint()) dom = union_box(dom, *r.target->support_hint());
    r.spec.domain = std::move(dom);
  }
  std::vector<Row> rows;
  const auto base = [&]() {
    Row row;
    row.experiment = experiment_name(config.experiment);
    row.m = static_cast<long long>(dbn.component_count());
    row.seed = config.seed;
    row.sigma = dbn.sigma();
    return row;
  };

  {
    Row row = base();
    row.q = 1.0;
    const DistanceReport mass = integrate(dbn.visible_fn(), r.spec);
    const double expected = 1.0 - dbn.deficiency();
    row.error = std::abs(mass.value - expected);
    row.bound = 3.0 * mass.error_estimate;
    std::ostringstream d;
    d << "kind=mass integral=" << format_double(mass.value) << " expected="
      << format_double(expected) << " deficiency=" << format_double(dbn.deficiency());
    row.detail = d.str();
    rows.push_back(row);
  }
  if (r.target) {
    const DensityFn f = r.target->fn();
    const DensityFn p = dbn.visible_fn();
    Row l2 = base();
    l2.q = 2.0;
    const DistanceReport l2rep = lq_distance(f, p, 2.0, r.spec);
    l2.error = l2rep.value;
    l2.bound = 3.0 * l2rep.error_estimate;
    l2.detail = "kind=l2 distance to the configured target";
    rows.push_back(l2);

    Row sup = base();
    sup.q = kInf;
    const DistanceReport suprep = sup_distance(f, p, r.spec);
    sup.error = suprep.value;
    sup.bound = 3.0 * suprep.error_estimate;
    sup.detail = "kind=sup distance to the configured target";
    rows.push_back(sup);

    Row kl = base();
    kl.q = 1.0;
    const DistanceReport klrep = kl_divergence(f, p, r.spec);
    kl.error = klrep.value;
    kl.bound = 3.0 * klrep.error_estimate;
    kl.detail = "kind=kl divergence from the configured target";
    rows.push_back(kl);
  }
  return rows;
}

}  // namespace

const char* experiment_name(Experiment e) {
  switch (e) {
    case Experiment::norms: return "norms";
    case Experiment::rate: return "rate";
    case Experiment::kl_rate: return "kl_rate";
    case Experiment::approximate: return "approximate";
    case Experiment::synthesize_rbm: return "synthesize_rbm";
    case Experiment::counterexample: return "counterexample";
    case Experiment::eval: return "eval";
  }
  throw PreconditionError("unknown experiment enum value");
}

Experiment experiment_from_name(const std::string& name) {
  std::string n = name;
  std::replace(n.begin(), n.end(), '-', '_');
  if (n == "norms") return Experiment::norms;
  if (n == "rate") return Experiment::rate;
  if (n == "kl_rate") return Experiment::kl_rate;
  if (n == "approximate") return Experiment::approximate;
  if (n == "synthesize_rbm") return Experiment::synthesize_rbm;
  if (n == "counterexample") return Experiment::counterexample;
  if (n == "eval") return Experiment::eval;
  throw PreconditionError("unknown experiment '" + name + "'");
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  if (key == "experiment") {
    experiment = experiment_from_name(value);
  } else if (key == "target") {
    target_spec = value;
  } else if (key == "parent") {
    parent_spec = value;
  } else if (key == "q") {
    q = parse_q_value(value);
  } else if (key == "q_values") {
    q_values.clear();
    for (const std::string& tok : split_ws(value)) q_values.push_back(parse_q_value(tok));
  } else if (key == "m") {
    const long long v = parse_int(value);
    if (v < 1) throw PreconditionError("m must be positive");
    m = static_cast<std::size_t>(v);
  } else if (key == "m_values") {
    m_values.clear();
    for (const std::string& tok : split_ws(value)) {
      const long long v = parse_int(tok);
      if (v < 1) throw PreconditionError("m_values must be positive");
      m_values.push_back(static_cast<std::size_t>(v));
    }
  } else if (key == "trials") {
    const long long v = parse_int(value);
    if (v < 1) throw PreconditionError("trials must be positive");
    trials = static_cast<std::size_t>(v);
  } else if (key == "seed") {
    const long long v = parse_int(value);
    if (v < 0) throw PreconditionError("seed must be nonnegative");
    seed = static_cast<std::uint64_t>(v);
  } else if (key == "epsilon") {
    epsilon = parse_double(value);
    if (!(epsilon > 0.0)) throw PreconditionError("epsilon must be positive");
  } else if (key == "sigma") {
    sigma = parse_double(value);
    if (!(sigma > 0.0)) throw PreconditionError("sigma must be positive");
  } else if (key == "greedy") {
    if (value == "true" || value == "1") greedy = true;
    else if (value == "false" || value == "0") greedy = false;
    else throw PreconditionError("greedy must be true or false");
  } else if (key == "greedy_iterations") {
    const long long v = parse_int(value);
    if (v < 0) throw PreconditionError("greedy_iterations must be nonnegative");
    greedy_iterations = static_cast<int>(v);
  } else if (key == "output") {
    output = value;
  } else if (key == "network") {
    network_in = value;
  } else if (key == "network_out") {
    network_out = value;
  } else if (key == "domain") {
    const std::vector<std::string> toks = split_ws(value);
    if (toks.empty() || toks.size() % 2 != 0)
      throw PreconditionError("domain needs lo/hi pairs, one per axis");
    Box b;
    for (std::size_t i = 0; i < toks.size(); i += 2) {
      b.lo.push_back(parse_double(toks[i]));
      b.hi.push_back(parse_double(toks[i + 1]));
      if (!(b.lo.back() < b.hi.back()))
        throw PreconditionError("domain lo must be below hi on every axis");
    }
    quadrature.domain = std::move(b);
    domain_set = true;
  } else if (key == "points_per_axis") {
    const long long v = parse_int(value);
    if (v < 2) throw PreconditionError("points_per_axis must be at least 2");
    quadrature.points_per_axis = static_cast<int>(v);
  } else if (key == "rule") {
    if (value == "midpoint") quadrature.rule = QuadratureRule::midpoint;
    else if (value == "gauss_legendre") quadrature.rule = QuadratureRule::gauss_legendre_composite;
    else throw PreconditionError("rule must be midpoint or gauss_legendre");
  } else if (key == "node_budget") {
    const long long v = parse_int(value);
    if (v < 1) throw PreconditionError("node_budget must be positive");
    quadrature.node_budget = static_cast<std::size_t>(v);
  } else if (key == "tail_padding") {
    quadrature.tail_padding = parse_double(value);
    if (quadrature.tail_padding < 0.0) throw PreconditionError("tail_padding must be >= 0");
  } else {
    throw PreconditionError("unknown key '" + key + "'");
  }
  entries[key] = value;
}

ExperimentConfig ExperimentConfig::parse_text(const std::string& text, const std::string& origin) {
  ExperimentConfig config;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    std::ostringstream where;
    where << origin << ':' << line_no << ": ";
    if (eq == std::string::npos)
      throw PreconditionError(where.str() + "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw PreconditionError(where.str() + "empty key");
    if (config.entries.count(key))
      throw PreconditionError(where.str() + "duplicate key '" + key + "'");
    try {
      config.set(key, value);
    } catch (const std::exception& ex) {
      throw PreconditionError(where.str() + ex.what());
    }
  }
  return config;
}

ExperimentConfig ExperimentConfig::parse_file(const std::string& path) {
  return parse_text(read_file(path), path);
}

void ExperimentConfig::validate() const {
  if (!entries.count("experiment")) throw PreconditionError("config: experiment is required");
  if (!entries.count("seed")) throw PreconditionError("config: seed is required");
  if (output.empty()) throw PreconditionError("config: output is required");

  const auto need = [&](bool ok, const char* what) {
    if (!ok)
      throw PreconditionError(std::string("config: ") + experiment_name(experiment) +
                              " requires " + what);
  };
  switch (experiment) {
    case Experiment::norms:
      need(!parent_spec.empty(), "a parent");
      break;
    case Experiment::rate:
      need(!target_spec.empty() && !parent_spec.empty(), "a target and a parent");
      need(sigma > 0.0, "sigma");
      need(!m_values.empty(), "m_values");
      need(std::isfinite(q) && q >= 1.0, "finite q >= 1");
      break;
    case Experiment::kl_rate:
      need(!target_spec.empty() && !parent_spec.empty(), "a target and a parent");
      need(!m_values.empty(), "m_values");
      break;
    case Experiment::approximate:
      need(!target_spec.empty() && !parent_spec.empty(), "a target and a parent");
      need(m >= 1, "m");
      need(epsilon > 0.0, "epsilon");
      need(q > 1.0, "q > 1");
      break;
    case Experiment::synthesize_rbm:
      need(m >= 1, "m");
      break;
    case Experiment::counterexample:
      break;
    case Experiment::eval:
      need(!network_in.empty(), "network");
      break;
  }
  // Density specs must resolve; do it once here so bad configs die before
  // run() opens any file.
  std::optional<ParentalDensity> parent;
  if (!parent_spec.empty()) parent = parse_parent_spec(parent_spec);
  if (!target_spec.empty()) parse_target_spec(target_spec, parent ? &*parent : nullptr);
}

std::string ExperimentConfig::canonical_text() const {
  std::ostringstream os;
  for (const auto& [key, value] : entries) os << key << " = " << value << '\n';
  return os.str();
}

std::uint64_t ExperimentConfig::config_hash() const {
  const std::string text = canonical_text();
  std::uint64_t h = 14695981039346656037ull;
  for (const unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

ParentalDensity parse_parent_spec(const std::string& spec) {
  return ParentalDensity::parse(trim(spec));
}

TargetDensity parse_target_spec(const std::string& spec, const ParentalDensity* parent) {
  const std::vector<std::string> toks = split_ws(spec);
  if (toks.empty()) throw PreconditionError("target spec: empty");
  const std::string& kind = toks[0];
  const auto want = [&](std::size_t n) {
    if (toks.size() != n)
      throw PreconditionError("target spec: '" + kind + "' expects " + std::to_string(n - 1) +
                              " parameters");
  };
  if (kind == "standard_gaussian") {
    want(2);
    return TargetDensity::standard_gaussian(static_cast<int>(parse_int(toks[1])));
  }
  if (kind == "from_parental") {
    want(1);
    if (parent == nullptr)
      throw PreconditionError("target spec: from_parental requires a parent");
    return TargetDensity::from_parental(*parent);
  }
  if (kind == "uniform_box") {
    if (toks.size() < 3 || toks.size() % 2 == 0)
      throw PreconditionError("target spec: uniform_box needs lo/hi pairs");
    Box b;
    for (std::size_t i = 1; i < toks.size(); i += 2) {
      b.lo.push_back(parse_double(toks[i]));
      b.hi.push_back(parse_double(toks[i + 1]));
    }
    return TargetDensity::uniform_box(std::move(b));
  }
  if (kind == "clipped_ramp") {
    want(2);
    return TargetDensity::clipped_ramp(static_cast<int>(parse_int(toks[1])));
  }
  if (kind == "gaussian_mixture") {
    if (toks.size() < 3) throw PreconditionError("target spec: gaussian_mixture needs k and d");
    const std::size_t k = static_cast<std::size_t>(parse_int(toks[1]));
    const int d = static_cast<int>(parse_int(toks[2]));
    const std::size_t expect = 3 + k + k * static_cast<std::size_t>(d) + k;
    if (k < 1 || d < 1 || toks.size() != expect)
      throw PreconditionError("target spec: gaussian_mixture needs k weights, k*d means, k scales");
    std::vector<double> weights, means, scales;
    std::size_t at = 3;
    for (std::size_t i = 0; i < k; ++i) weights.push_back(parse_double(toks[at++]));
    for (std::size_t i = 0; i < k * static_cast<std::size_t>(d); ++i)
      means.push_back(parse_double(toks[at++]));
    for (std::size_t i = 0; i < k; ++i) scales.push_back(parse_double(toks[at++]));
    return TargetDensity::gaussian_mixture(std::move(weights), std::move(means),
                                           std::move(scales), d);
  }
  throw PreconditionError("target spec: unknown kind '" + kind + "'");
}

std::vector<CounterexampleRow> counterexample_demo(const std::vector<std::size_t>& m_values,
                                                   const QuadratureSpec& spec) {
  if (m_values.empty()) throw PreconditionError("counterexample_demo: m_values is empty");
  const DensityFn one = [](std::span<const double>) { return 1.0; };
  std::vector<CounterexampleRow> rows;
  for (const std::size_t m : sorted_unique(m_values)) {
    const TargetDensity f = TargetDensity::clipped_ramp(static_cast<int>(m));
    CounterexampleRow row;
    row.m = m;
    row.c_m = TargetDensity::clipped_ramp_constant(static_cast<int>(m));
    row.integral = integrate(f.fn(), spec).value;
    row.l2 = lq_distance(f.fn(), one, 2.0, spec).value;
    row.kl = kl_divergence(f.fn(), one, spec).value;
    row.sup_gap = sup_distance(f.fn(), one, spec).value;
    rows.push_back(row);
  }
  return rows;
}

std::string emit_plot_script(const std::string& csv_path) {
  const std::string text = read_file(csv_path);
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != kCsvSchema)
    throw PreconditionError("emit_plot_script: '" + csv_path + "' is not a dbnapprox-csv v1 file");
  if (!std::getline(is, line) || line != kCsvHeader)
    throw PreconditionError("emit_plot_script: '" + csv_path + "' has an unexpected header row");

  const auto split_row = [](const std::string& row) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < row.size(); ++i) {
      const char c = row[i];
      if (quoted) {
        if (c == '"') {
          if (i + 1 < row.size() && row[i + 1] == '"') {
            cur += '"';
            ++i;
          } else {
            quoted = false;
          }
        } else {
          cur += c;
        }
      } else if (c == '"') {
        quoted = true;
      } else if (c == ',') {
        out.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    out.push_back(cur);
    return out;
  };

  struct Point {
    double m, error, bound;
  };
  std::vector<Point> points;
  double q = 2.0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_row(line);
    if (cells.size() != 11)
      throw PreconditionError("emit_plot_script: malformed row in '" + csv_path + "'");
    if (cells[8] != "summary") continue;
    points.push_back({parse_double(cells[1]), parse_double(cells[6]), parse_double(cells[7])});
    q = parse_q_value(cells[4]);
  }
  if (points.empty())
    throw PreconditionError("emit_plot_script: no summary rows in '" + csv_path + "'");

  const double slope = -(1.0 - 1.0 / std::min(q, 2.0));
  // Reference line anchored at the first mean point.
  const double anchor = points.front().error / std::pow(points.front().m, slope);

  std::filesystem::path script_path(csv_path);
  script_path.replace_extension(".gp");
  std::filesystem::path png_name = script_path.filename();
  png_name.replace_extension(".png");

  std::ostringstream os;
  os << "# dbnapprox plot v1\n";
  os << "# mean error vs m on log-log axes, with the bound and the reference slope\n";
  os << "set terminal pngcairo size 900,600\n";
  os << "set output '" << png_name.string() << "'\n";
  os << "set logscale xy\n";
  os << "set xlabel 'm'\n";
  os << "set ylabel 'error'\n";
  os << "set key bottom left\n";
  os << "$rows << EOD\n";
  os << "# m mean_error bound\n";
  for (const Point& p : points)
    os << format_double(p.m) << ' ' << format_double(p.error) << ' ' << format_double(p.bound)
       << '\n';
  os << "EOD\n";
  os << "ref(x) = " << format_double(anchor) << " * x**(" << format_double(slope) << ")\n";
  os << "plot $rows using 1:2 with linespoints title 'mean error', \\\n";
  os << "     $rows using 1:3 with lines title 'bound', \\\n";
  os << "     ref(x) with lines dashtype 2 title 'slope " << format_double(slope) << "'\n";

  atomic_write(script_path.string(), os.str());
  return script_path.string();
}

RunOutcome run(const ExperimentConfig& config) {
  const auto started = std::chrono::steady_clock::now();
  config.validate();
  Resolved resolved = resolve(config);
  const std::string hash = hash_hex(config.config_hash());

  RunOutcome outcome;
  std::string csv;
  if (config.experiment == Experiment::counterexample) {
    std::vector<std::size_t> ms = config.m_values;
    if (ms.empty()) ms = {1, 2, 4, 8, 16, 32, 64};
    const std::vector<CounterexampleRow> rows = counterexample_demo(ms, resolved.spec);
    std::ostringstream os;
    os << kCounterSchema << '\n' << kCounterHeader << '\n';
    for (const CounterexampleRow& r : rows)
      os << r.m << ',' << format_double(r.c_m) << ',' << format_double(r.integral) << ','
         << format_double(r.l2) << ',' << format_double(r.kl) << ',' << format_double(r.sup_gap)
         << ',' << hash << '\n';
    csv = os.str();
  } else {
    std::vector<Row> rows;
    switch (config.experiment) {
      case Experiment::norms: rows = run_norms(config, resolved); break;
      case Experiment::rate: rows = run_rate(config, resolved); break;
      case Experiment::kl_rate: rows = run_kl_rate(config, resolved); break;
      case Experiment::approximate:
        rows = run_approximate(config, resolved, outcome.files_written);
        break;
      case Experiment::synthesize_rbm: rows = run_synthesize(config); break;
      case Experiment::eval: rows = run_eval(config, resolved, outcome.files_written); break;
      case Experiment::counterexample: break;  // handled above
    }
    for (const Row& r : rows)
      if (r.status == "failed") ++outcome.failed_rows;
    csv = render_rows(rows, hash);
  }

  atomic_write(config.output, csv);
  outcome.files_written.insert(outcome.files_written.begin(), config.output);

  if (config.experiment == Experiment::rate || config.experiment == Experiment::kl_rate)
    outcome.files_written.push_back(emit_plot_script(config.output));

  outcome.exit_code = outcome.failed_rows == 0 ? 0 : 2;
  const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::steady_clock::now() - started)
                           .count();
  std::fprintf(stderr, "dbnapprox: %s finished in %lld ms (failed rows: %zu)\n",
               experiment_name(config.experiment), static_cast<long long>(elapsed),
               outcome.failed_rows);
  return outcome;
}

}  // namespace dbnapprox
