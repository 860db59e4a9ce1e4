#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "ctstep/common.hpp"

namespace ctstep {

inline constexpr const char* kToolVersion = "1.0.0";

/// Geometric step ladder base * ratio^k, k = 0..count-1.  Strictly
/// decreasing (0 < ratio < 1) with count >= 3 so a slope can be fitted.
struct DtLadder {
  double base = 0.25;
  double ratio = 0.5;
  int count = 7;

  std::vector<double> values() const;
};

enum class ErrorNorm { Inf, Two, Relative };

std::string norm_name(ErrorNorm norm);
ErrorNorm norm_from_name(const std::string& name);

/// One experiment invocation: which runner, on what, and where the output
/// goes.  Serializes to a flat JSON object; unknown keys are rejected so a
/// typo in a config file fails fast instead of silently using a default.
struct ExperimentConfig {
  std::string experiment = "converge"; // converge | stability | paths | ssp
                                       // | schrodinger | solve-composite
  std::vector<std::string> problems;
  std::vector<std::string> methods;
  // Inline scheme descriptor; when present it runs alongside the named
  // methods under the name "inline-scheme".
  std::optional<nlohmann::json> scheme;
  DtLadder ladder;
  std::optional<double> t_end; // default: each problem's own horizon
  ErrorNorm norm = ErrorNorm::Inf;
  bool fair = false; // match work, not step count, across methods
  std::uint64_t seed = 0;
  std::string out_dir = "out";

  int paths_n = 3; // paths experiment: weight count whose orderings are drawn

  int ssp_samples = 200; // ssp experiment: log grid over [ssp_u_lo, ssp_u_hi]
  double ssp_u_lo = 0.1;
  double ssp_u_hi = 20.0;
};

/// Fills the fields that make the experiment run well stand-alone (e.g. the
/// schrodinger ladder starts fine enough that the explicit methods are
/// stable on the spectral grid).
ExperimentConfig default_config(const std::string& experiment);

nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const nlohmann::json& j);

/// FNV-1a over the canonical JSON dump, as 16 hex digits.  Stamped into
/// every CSV header so an output file names the config that produced it.
std::string config_hash(const ExperimentConfig& cfg);

/// Least-squares slope of log(error) against log(dt).  Rows whose error is
/// non-finite or <= 0 (blow-ups, exact-to-roundoff hits) are skipped; fewer
/// than 3 usable rows is an ArgumentError.
double estimate_order(const std::vector<double>& dts, const std::vector<double>& errors);

struct ConvergenceRow {
  double dt = 0.0;
  double error = 0.0;
  long long evals = 0;
  bool blew_up = false;
};

struct ConvergenceTable {
  std::string problem;
  std::string method;
  std::vector<ConvergenceRow> rows;
  double slope = 0.0; // over the non-blow-up rows
};

/// Runs one method down the ladder against the exact solution, or against a
/// cached rk4 reference fixture (dt = 1e-6) for problems without one.
ConvergenceTable converge_table(const ExperimentConfig& cfg, const std::string& problem,
                                const std::string& method);

struct RunOutcome {
  std::vector<std::filesystem::path> files;
  bool check_passed = true;            // experiment-specific thresholds
  std::vector<std::string> check_notes; // one human-readable line per check
};

RunOutcome run_converge(const ExperimentConfig& cfg);
RunOutcome run_stability(const ExperimentConfig& cfg);
RunOutcome run_paths(const ExperimentConfig& cfg);
RunOutcome run_ssp(const ExperimentConfig& cfg);
RunOutcome run_schrodinger_compare(const ExperimentConfig& cfg);
RunOutcome run_solve_composite(const ExperimentConfig& cfg);

/// Dispatch on cfg.experiment; unknown name is a ConfigError.
RunOutcome run_experiment(const ExperimentConfig& cfg);

} // namespace ctstep
