#include "ctstep/cli.hpp"

#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ctstep/errors.hpp"
#include "ctstep/experiments.hpp"

namespace ctstep {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitCheck = 4;

const std::map<std::string, std::string>& subcommand_help() {
  static const std::map<std::string, std::string> help = {
      {"converge", "error-vs-dt ladders with least-squares order fits"},
      {"stability", "stability-region rasters, boundaries, and ray extents"},
      {"paths", "polylines of the accumulated complex substeps"},
      {"ssp", "largest monotone step of each method along a scalar decay"},
      {"schrodinger", "equal-work comparison of rk3 against the 3-substep path"},
      {"solve-composite", "solve the 5-evaluation composite scheme and report its order"},
  };
  return help;
}

} // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"experiments with complex-weighted Euler substep paths"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  std::string config_file, out_dir;
  std::uint64_t seed = 0;
  bool fair = false, check = false;
  int paths_n = 3;

  for (const auto& [kind, help] : subcommand_help()) {
    CLI::App* sub = app.add_subcommand(kind, help);
    sub->add_option("--config", config_file, "JSON config file; flags below override its fields");
    sub->add_option("--seed", seed, "RNG seed, recorded in every output header");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_flag("--fair", fair, "match evaluation budgets across methods");
    sub->add_flag("--check", check, "verify the run's thresholds; exit 4 on a miss");
    if (kind == "paths") sub->add_option("--n", paths_n, "weight count whose orderings are drawn");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e); // --help / --version
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string kind = sub->get_name();

  try {
    ExperimentConfig cfg;
    if (sub->count("--config") > 0) {
      std::ifstream is(config_file);
      if (!is) throw ConfigError("config: cannot open \"" + config_file + "\"");
      nlohmann::json j;
      try {
        is >> j;
      } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config: " + std::string(e.what()));
      }
      cfg = config_from_json(j);
    } else {
      cfg = default_config(kind);
    }
    cfg.experiment = kind;
    if (sub->count("--seed") > 0) cfg.seed = seed;
    if (sub->count("--out") > 0) cfg.out_dir = out_dir;
    if (sub->count("--fair") > 0) cfg.fair = fair;
    if (kind == "paths" && sub->count("--n") > 0) cfg.paths_n = paths_n;

    const RunOutcome out = run_experiment(cfg);
    for (const auto& f : out.files) std::cout << "wrote " << f.string() << "\n";
    for (const auto& note : out.check_notes) std::cout << note << "\n";
    if (check) {
      std::cout << (out.check_passed ? "check: passed" : "check: FAILED") << "\n";
      if (!out.check_passed) return kExitCheck;
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NotFoundError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const CapabilityError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
}

} // namespace ctstep
