#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "platoon/agents.hpp"
#include "platoon/scenario.hpp"

namespace platoon {

#define PLATOON_VERSION "0.3.0"

enum class Algorithm { random, drl, analytic };

std::string to_string(Algorithm a);
Algorithm parse_algorithm(const std::string& s);  // throws ConfigError

/// Aggregated outcome of one (density, keep probability, algorithm) point.
/// `p_c_ht` = collisions / (measured periods per run * runs).
struct ExperimentResult {
  double rho = 0.0;
  double p = 0.0;
  Algorithm algorithm = Algorithm::random;
  int runs = 0;
  int periods = 0;  // transmission periods per run
  std::uint64_t collisions = 0;
  double p_c_ht = 0.0;
  double std_error = 0.0;  // binomial standard error of p_c_ht
  std::uint64_t seed = 0;
  double wall_time_s = 0.0;

  int warmup_periods = 0;
  int measure_from = 0;  // first period counted in the headline estimate
  std::uint64_t measured_periods = 0;  // summed over runs
  // Whole post-warm-up window; differs from the headline only for DRL.
  std::uint64_t full_collisions = 0;
  std::uint64_t full_periods = 0;
  double full_rate = 0.0;
  std::uint64_t leader_saturations = 0;
  std::uint64_t sps_saturations = 0;
  bool failed = false;
  std::string diagnostics;
};

// Per-run counters before aggregation.
struct RunStats {
  std::uint64_t collisions = 0;
  std::uint64_t measured_periods = 0;
  std::uint64_t full_collisions = 0;
  std::uint64_t full_periods = 0;
  std::uint64_t leader_saturations = 0;
  std::uint64_t sps_saturations = 0;
};

struct CurvePoint {
  int period;
  double loss;
  double rolling_collision_rate;
};

/// Optional per-run side outputs.
struct RunArtifacts {
  bool capture_sensing = false;
  bool capture_curve = false;
  int curve_window = 100;
  std::vector<SensingRow> pl_rows;       // busy = 1
  std::vector<SensingRow> last_pm_rows;  // busy = 1
  std::vector<CurvePoint> curve;
  std::optional<QNetwork> network;  // final weights of a DRL run
};

struct PointOptions {
  Algorithm algorithm = Algorithm::random;
  DrlHyperParams drl;
  bool persist_agent = false;  // one DRL agent carried across all runs
};

// First period included in the headline estimate for `algo`.
int measure_start(const ScenarioConfig& cfg, Algorithm algo);

// Seed of the (density, keep probability) point; shared by all algorithms
// so random and DRL runs see identical placements.
std::uint64_t point_seed(const ScenarioConfig& cfg);

/// One seeded (placement, world, agent) run. `agent`, when given, is used
/// instead of a fresh policy (persisted DRL weights).
RunStats run_single(const ScenarioConfig& cfg, const PointOptions& opt, int run_index,
                    RunArtifacts* artifacts = nullptr, Policy* agent = nullptr);

/// All runs of a point, OpenMP-parallel across runs (serial when one agent
/// persists across runs). Results are identical to run_point_serial apart
/// from wall time. `run0` receives the side outputs of the first run.
/// A run that throws marks the point failed; the exception does not escape.
ExperimentResult run_point(const ScenarioConfig& cfg, const PointOptions& opt,
                           RunArtifacts* run0 = nullptr);
ExperimentResult run_point_serial(const ScenarioConfig& cfg, const PointOptions& opt,
                                  RunArtifacts* run0 = nullptr);

// Closed-form entry for the point, in ExperimentResult shape.
ExperimentResult analytic_point(const ScenarioConfig& cfg);

ExperimentResult aggregate(const ScenarioConfig& cfg, Algorithm algo,
                           const std::vector<RunStats>& runs);

struct SweepSpec {
  ScenarioConfig scenario;  // base; density/keep/runs/periods overridden per point
  std::vector<double> densities{20, 40, 60, 80, 100, 120, 140, 160, 180, 200};
  std::vector<double> keep_probs{0.9, 0.7, 0.5};
  std::vector<Algorithm> algorithms{Algorithm::random, Algorithm::analytic};
  int runs_per_point = 50;
  int periods_per_run = 10000;
  DrlHyperParams drl;
  bool persist_agent = false;

  void validate() const;
  ScenarioConfig point_config(double rho, double p) const;
};

struct ComparisonRow {
  double rho = 0.0;
  double p = 0.0;
  std::optional<double> analytic;
  std::optional<double> random;
  std::optional<double> drl;
  std::optional<double> reduction;  // 1 - drl / random
};

struct SweepOutcome {
  std::vector<ExperimentResult> results;  // density-major, then p, then algorithm
  std::vector<ComparisonRow> comparison;
  bool any_failed() const;
};

/// Executes every point. Points are the unit of parallel scheduling.
SweepOutcome run_sweep(const SweepSpec& spec);

std::vector<ComparisonRow> compare(const std::vector<ExperimentResult>& results);

inline constexpr const char* kResultsCsvHeader =
    "rho,p,algorithm,runs,periods,collisions,p_c_ht,stderr,seed,wall_time_s";

std::string results_csv(const std::vector<ExperimentResult>& results);

/// Writes results.csv and results.json (spec, hash, version, results,
/// comparison) into out_dir, creating it if needed. Throws on I/O failure.
void emit_results(const SweepOutcome& outcome, const SweepSpec& spec,
                  const std::string& out_dir);

// CSV of a sensing matrix with 1 = idle, 0 = busy and a one-line header.
std::string sensing_csv(const std::vector<SensingRow>& busy_rows, const std::string& header);

std::string curve_csv(const std::vector<CurvePoint>& curve);

}  // namespace platoon
