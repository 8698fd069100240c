#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dbnapprox/densities.hpp"
#include "dbnapprox/metrics.hpp"

namespace dbnapprox {

enum class Experiment { norms, rate, kl_rate, approximate, synthesize_rbm, counterexample, eval };

const char* experiment_name(Experiment e);
/// Accepts both hyphen and underscore spellings (kl-rate / kl_rate).
Experiment experiment_from_name(const std::string& name);

/// Flat key = value experiment description ('#' starts a comment). Parsing
/// rejects unknown and duplicated keys with the offending line number;
/// validate() checks per-experiment requirements and resolves the density
/// specs once so broken configs fail before any output exists.
struct ExperimentConfig {
  Experiment experiment = Experiment::norms;
  std::string target_spec;
  std::string parent_spec;
  double q = 2.0;
  std::vector<double> q_values;        // norms
  std::size_t m = 0;                   // approximate, synthesize_rbm
  std::vector<std::size_t> m_values;   // rate, kl_rate, counterexample
  std::size_t trials = 1;
  std::uint64_t seed = 0;
  double epsilon = 0.0;                // approximate budget / synthesis tolerance
  double sigma = 0.0;                  // rate smoothing scale
  bool greedy = true;
  int greedy_iterations = 48;
  std::string output;                  // CSV path
  std::string network_in;              // eval
  std::string network_out;             // approximate

  /// Quadrature description. The domain stays unset unless the config gave
  /// one; run() then derives a default from the densities involved.
  QuadratureSpec quadrature;
  bool domain_set = false;

  /// Raw pairs exactly as configured. The config hash covers these (sorted by
  /// key), so every output row names the configuration that produced it.
  std::map<std::string, std::string> entries;

  static ExperimentConfig parse_file(const std::string& path);
  static ExperimentConfig parse_text(const std::string& text, const std::string& origin);

  /// Applies one key = value pair (same grammar as a config line).
  void set(const std::string& key, const std::string& value);

  void validate() const;
  std::string canonical_text() const;
  std::uint64_t config_hash() const;  // FNV-1a 64 of canonical_text()
};

/// Config density grammar. Parents use the ParentalDensity text form
/// ("gaussian <d>", "truncated_exponential <d> <rates> <uppers>"); targets add
///   standard_gaussian <d>
///   from_parental                      (requires a parent)
///   uniform_box <lo> <hi> [...]
///   clipped_ramp <m>
///   gaussian_mixture <k> <d> <weights k> <means k*d> <scales k>
ParentalDensity parse_parent_spec(const std::string& spec);
TargetDensity parse_target_spec(const std::string& spec, const ParentalDensity* parent);

struct CounterexampleRow {
  std::size_t m = 0;
  double c_m = 0.0;       // normalizing constant
  double integral = 0.0;  // quadrature check of total mass
  double l2 = 0.0;        // ||f_m - 1||_{L2([0,1])}
  double kl = 0.0;        // KL(f_m || 1)
  double sup_gap = 0.0;   // ||f_m - 1||_inf
};

/// The clipped-ramp sequence against the uniform density on [0,1]: KL and L2
/// distances shrink with m while the sup gap stays bounded away from zero.
std::vector<CounterexampleRow> counterexample_demo(const std::vector<std::size_t>& m_values,
                                                   const QuadratureSpec& spec);

/// Reads a rate-shaped CSV ("# dbnapprox-csv v1" schema), extracts the
/// summary rows, and writes a standalone gnuplot script beside it (data
/// inlined): log-log mean error vs m, the bound curve, and a reference line
/// of slope -(1 - 1/min(q,2)). Returns the script path. PreconditionError on
/// schema mismatch or when there is nothing to plot.
std::string emit_plot_script(const std::string& csv_path);

struct RunOutcome {
  int exit_code = 0;  // 0 all rows ok; 2 when some trials failed
  std::vector<std::string> files_written;
  std::size_t failed_rows = 0;
};

/// Executes the experiment and writes its outputs: the CSV (atomically), a
/// plot script for the rate experiments, and the network file when
/// approximate has network_out set. Output bytes depend only on the config;
/// rows are sorted by (m, trial) with per-m summary rows at trial -1. A trial
/// that throws becomes a status=failed row instead of aborting the run.
/// Timings go to stderr, never into the files.
RunOutcome run(const ExperimentConfig& config);

}  // namespace dbnapprox
