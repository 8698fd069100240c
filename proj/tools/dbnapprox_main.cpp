#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "dbnapprox/errors.hpp"
#include "dbnapprox/harness.hpp"
#include "dbnapprox/parallel.hpp"

namespace {

struct SubSpec {
  const char* name;
  const char* blurb;
};

constexpr SubSpec kSubcommands[] = {
    {"norms", "compare closed-form kernel norms against quadrature"},
    {"rate", "measure mixture sampling error versus component count"},
    {"kl-rate", "run the relative-entropy pipeline over a ladder of sizes"},
    {"approximate", "build one network for a target and report its certificate"},
    {"synthesize-rbm", "turn random unit-vector masses into binary networks"},
    {"counterexample", "tabulate the ramp family where sup error stays bounded away from zero"},
    {"eval", "load a serialized network and measure it"},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deep belief network approximation toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string seed_override;
  int threads = 0;
  for (const SubSpec& spec : kSubcommands) {
    CLI::App* sub = app.add_subcommand(spec.name, spec.blurb);
    sub->add_option("--config", config_path, "experiment config file")->required();
    sub->add_option("--out", out_dir, "directory that receives the output files");
    sub->add_option("--seed", seed_override, "override the config seed");
    sub->add_option("--threads", threads, "worker threads (default: DBNAPPROX_THREADS or 1)");
  }

  CLI11_PARSE(app, argc, argv);

  try {
    if (threads <= 0) {
      if (const char* env = std::getenv("DBNAPPROX_THREADS")) threads = std::atoi(env);
    }
    if (threads > 0) dbnapprox::set_worker_count(threads);

    dbnapprox::ExperimentConfig config = dbnapprox::ExperimentConfig::parse_file(config_path);
    const std::string sub = app.get_subcommands().front()->get_name();
    if (dbnapprox::experiment_from_name(sub) != config.experiment)
      throw dbnapprox::PreconditionError("config file sets experiment '" +
                                         std::string(dbnapprox::experiment_name(config.experiment)) +
                                         "' but the subcommand is '" + sub + "'");
    if (!seed_override.empty()) config.set("seed", seed_override);
    if (!out_dir.empty()) {
      namespace fs = std::filesystem;
      config.output = (fs::path(out_dir) / fs::path(config.output).filename()).string();
      if (!config.network_out.empty())
        config.network_out = (fs::path(out_dir) / fs::path(config.network_out).filename()).string();
    }

    const dbnapprox::RunOutcome outcome = dbnapprox::run(config);
    for (const std::string& file : outcome.files_written) std::cout << file << '\n';
    return outcome.exit_code;
  } catch (const std::exception& ex) {
    std::cerr << "dbnapprox: " << ex.what() << '\n';
    return 1;
  }
}
