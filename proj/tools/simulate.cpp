#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rmprice/rmprice.hpp"

namespace {

constexpr const char* kOutEnv = "RMPRICE_OUT_DIR";

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regret-minimisation pricing game simulator"};
  std::string config_path;
  std::vector<std::string> techniques;
  std::vector<std::uint64_t> seeds;
  std::string scale;
  std::string out;
  int workers = 0;
  bool stop_at_equilibrium = false;
  bool strict_information = false;

  app.add_option("--config", config_path, "Config file (key = value lines)")->required();
  app.add_option("--technique", techniques,
                 "external, internal, swap, hmc-baseline, non-competition or random (repeatable)");
  app.add_option("--seed", seeds, "RNG seed (repeatable)");
  app.add_option("--scale", scale, "Population preset")->check(CLI::IsMember({"small", "large", "custom"}));
  app.add_option("--out", out, std::string("Output directory (default: $") + kOutEnv + " or ./out)");
  app.add_option("--workers", workers, "Parallel runs")->check(CLI::PositiveNumber);
  app.add_flag("--stop-at-equilibrium", stop_at_equilibrium, "End a run once probabilities settle");
  app.add_flag("--strict-information", strict_information,
               "Counterfactuals use only the announced winning price");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  rmprice::ExperimentSpec spec;
  try {
    spec = rmprice::parse_config(config_path);
    if (!scale.empty()) {
      spec.scale = *rmprice::parse_scale(scale);
      rmprice::apply_scale(spec.base, spec.scale);
    }
    if (!techniques.empty()) {
      spec.techniques.clear();
      for (const auto& t : techniques) {
        const auto parsed = rmprice::parse_technique(t);
        if (!parsed) throw rmprice::ConfigError("unknown technique '" + t + "'");
        spec.techniques.push_back(*parsed);
      }
    }
    if (!seeds.empty()) spec.seeds = seeds;
    if (!out.empty()) spec.out_dir = out;
    if (spec.out_dir.empty()) {
      const char* env = std::getenv(kOutEnv);
      spec.out_dir = env && *env ? env : "out";
    }
    if (workers > 0) spec.workers = workers;
    if (stop_at_equilibrium) spec.base.stop_at_equilibrium = true;
    if (strict_information) spec.base.strict_information = true;
    spec.validate();
  } catch (const std::exception& e) {
    std::cerr << "simulate: " << e.what() << '\n';
    return 2;
  }

  rmprice::ExperimentOutcome outcome;
  try {
    outcome = rmprice::run_experiment(spec);
  } catch (const std::exception& e) {
    std::cerr << "simulate: " << e.what() << '\n';
    return 1;
  }
  for (const auto& err : outcome.errors) std::cerr << "simulate: " << err << '\n';
  for (const auto& run : outcome.runs)
    for (const auto& f : run.audit.failures)
      std::cerr << "simulate: audit failed for " << rmprice::run_dir_name(run.technique, run.seed) << ": "
                << f << '\n';

  if (!rmprice::emit_summary(outcome.runs, std::cout)) return 1;
  std::cout << "wrote " << outcome.runs.size() << " run(s) to " << spec.out_dir << '\n';
  return outcome.ok() ? 0 : 1;
}
