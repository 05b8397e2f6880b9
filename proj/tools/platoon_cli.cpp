// Command-line front end: closed-form tables, single-point simulations,
// JSON-driven sweeps and sensing-matrix export.

#include <omp.h>

#include <filesystem>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "platoon/analytic.hpp"
#include "platoon/config_io.hpp"
#include "platoon/harness.hpp"

using namespace platoon;
namespace fs = std::filesystem;

namespace {

struct CommonFlags {
  std::vector<double> rho;
  std::vector<double> keep_prob;
  std::optional<std::uint64_t> seed;
  std::optional<int> periods;
  std::optional<int> runs;
  std::string out_dir;
  int threads = 0;
  std::string config;
};

void add_point_flags(CLI::App* app, CommonFlags& f, bool lists) {
  if (lists) {
    app->add_option("--rho", f.rho, "vehicle densities (vehicles/km)");
    app->add_option("--keep-prob", f.keep_prob, "SPS resource keeping probabilities");
  } else {
    app->add_option("--rho", f.rho, "vehicle density (vehicles/km)")->expected(1);
    app->add_option("--keep-prob", f.keep_prob, "SPS resource keeping probability")
        ->expected(1);
  }
}

void add_run_flags(CLI::App* app, CommonFlags& f) {
  app->add_option("--seed", f.seed, "master seed");
  app->add_option("--periods", f.periods, "transmission periods per run");
  app->add_option("--runs", f.runs, "independent runs per point");
  app->add_option("--threads", f.threads, "worker threads (0 = all processors)");
  app->add_option("--config", f.config,
                  "JSON with optional \"scenario\" and \"drl\" objects used as the base");
}

// Base spec from --config plus command-line overrides.
SweepSpec base_spec(const CommonFlags& f) {
  SweepSpec spec;
  if (!f.config.empty()) {
    const json j = load_json_file(f.config);
    if (j.contains("spec")) {
      spec = j.at("spec").get<SweepSpec>();
    } else {
      SweepSpec partial;
      if (j.contains("scenario")) partial.scenario = j.at("scenario").get<ScenarioConfig>();
      if (j.contains("drl")) partial.drl = j.at("drl").get<DrlHyperParams>();
      partial.runs_per_point = partial.scenario.runs_per_point;
      partial.periods_per_run = partial.scenario.periods_per_run;
      spec = partial;
    }
  } else {
    spec.runs_per_point = spec.scenario.runs_per_point;
    spec.periods_per_run = spec.scenario.periods_per_run;
  }
  if (f.seed) spec.scenario.seed = *f.seed;
  if (f.periods) spec.periods_per_run = *f.periods;
  if (f.runs) spec.runs_per_point = *f.runs;
  if (!f.rho.empty()) spec.densities = f.rho;
  if (!f.keep_prob.empty()) spec.keep_probs = f.keep_prob;
  return spec;
}

void apply_threads(int threads) {
  if (threads > 0) omp_set_num_threads(threads);
}

int cmd_analytic(const CommonFlags& f, bool exact) {
  SweepSpec spec = base_spec(f);
  analytic::Inputs base;
  base.n_vrb = n_virtual_blocks(spec.scenario);
  base.range_km = spec.scenario.transmission_range_km;
  base.platoon_km = spec.scenario.platoon_length_km;
  base.sps_periods = spec.scenario.sps_periods;
  base.exact_na = exact;

  std::string csv = "rho,p,N_a,P_c_rs,P_one_ht,P_c_ht\n";
  char buf[256];
  for (const auto& row : analytic::evaluate_grid(base, spec.densities, spec.keep_probs)) {
    std::snprintf(buf, sizeof buf, "%g,%g,%.12g,%.12g,%.12g,%.12g\n", row.rho, row.keep_prob,
                  row.out.n_a, row.out.p_c_rs, row.out.p_one_ht, row.out.p_c_ht);
    csv += buf;
  }
  if (f.out_dir.empty()) {
    std::cout << csv;
  } else {
    fs::create_directories(f.out_dir);
    write_text_file((fs::path(f.out_dir) / "analytic.csv").string(), csv);
  }
  return 0;
}

int cmd_simulate(const CommonFlags& f, const std::string& algo_name, bool persist) {
  apply_threads(f.threads);
  SweepSpec spec = base_spec(f);
  if (f.rho.empty()) spec.densities = {spec.scenario.density_rho};
  if (f.keep_prob.empty()) spec.keep_probs = {spec.scenario.keep_prob};
  const Algorithm algo = parse_algorithm(algo_name);
  if (algo == Algorithm::analytic) throw ConfigError("simulate needs --algo random or drl");
  // The analytic row rides along so the emitted spec re-runs to the same table.
  spec.algorithms = {algo, Algorithm::analytic};
  spec.persist_agent = persist;
  spec.validate();

  const ScenarioConfig cfg = spec.point_config(spec.densities[0], spec.keep_probs[0]);
  PointOptions opt{algo, spec.drl, persist};
  RunArtifacts art;
  art.capture_curve = algo == Algorithm::drl && !f.out_dir.empty();

  SweepOutcome outcome;
  outcome.results.push_back(run_point(cfg, opt, &art));
  outcome.results.push_back(analytic_point(cfg));
  outcome.comparison = compare(outcome.results);

  std::cout << results_csv(outcome.results);
  for (const auto& r : outcome.results)
    if (r.failed) std::cerr << "point failed: " << r.diagnostics << "\n";

  if (!f.out_dir.empty()) {
    emit_results(outcome, spec, f.out_dir);
    const fs::path dir(f.out_dir);
    if (art.network) {
      art.network->save_binary((dir / "model.bin").string());
      DrlHyperParams h = spec.drl;
      h.shape = art.network->shape();
      write_text_file((dir / "model.json").string(),
                      network_sidecar(*art.network, h).dump(2) + "\n");
    }
    if (art.capture_curve) write_text_file((dir / "curve.csv").string(), curve_csv(art.curve));
  }
  return outcome.any_failed() ? 1 : 0;
}

int cmd_sweep(const CommonFlags& f, const std::string& spec_path) {
  apply_threads(f.threads);
  const json j = load_json_file(spec_path);
  // Accept a bare spec or a results.json written by an earlier sweep.
  SweepSpec spec = j.contains("spec") ? j.at("spec").get<SweepSpec>() : j.get<SweepSpec>();
  if (f.seed) spec.scenario.seed = *f.seed;
  if (f.periods) spec.periods_per_run = *f.periods;
  if (f.runs) spec.runs_per_point = *f.runs;
  if (!f.rho.empty()) spec.densities = f.rho;
  if (!f.keep_prob.empty()) spec.keep_probs = f.keep_prob;

  const SweepOutcome outcome = run_sweep(spec);
  if (f.out_dir.empty()) {
    std::cout << results_csv(outcome.results);
  } else {
    emit_results(outcome, spec, f.out_dir);
  }
  for (const auto& r : outcome.results)
    if (r.failed)
      std::cerr << "point rho=" << r.rho << " p=" << r.p << " " << to_string(r.algorithm)
                << " failed: " << r.diagnostics << "\n";
  return outcome.any_failed() ? 1 : 0;
}

int cmd_export_sensing(const CommonFlags& f, const std::string& algo_name, int run) {
  SweepSpec spec = base_spec(f);
  const double rho = f.rho.empty() ? spec.scenario.density_rho : f.rho[0];
  const double p = f.keep_prob.empty() ? spec.scenario.keep_prob : f.keep_prob[0];
  ScenarioConfig cfg = spec.point_config(rho, p);
  if (!f.periods) cfg.periods_per_run = 100;  // a readable default for inspection
  cfg.validate();

  PointOptions opt{parse_algorithm(algo_name), spec.drl, false};
  RunArtifacts art;
  art.capture_sensing = true;
  run_single(cfg, opt, run, &art);

  const fs::path dir(f.out_dir.empty() ? "." : f.out_dir);
  fs::create_directories(dir);
  const std::string note = " sensing, one row per period, one column per VRB, 1=idle 0=busy";
  write_text_file((dir / "pl_sensing.csv").string(),
                  sensing_csv(art.pl_rows, "# platoon leader" + note));
  write_text_file((dir / "last_pm_sensing.csv").string(),
                  sensing_csv(art.last_pm_rows, "# last platoon member" + note));
  std::cout << "wrote " << art.pl_rows.size() << " periods to " << dir.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Platoon leader resource selection under NR sidelink semi-persistent scheduling"};
  app.require_subcommand(1);
  app.set_version_flag("--version", PLATOON_VERSION);

  CommonFlags f;

  auto* an = app.add_subcommand("analytic", "closed-form collision table as CSV");
  bool exact = false;
  add_point_flags(an, f, true);
  an->add_option("--out-dir", f.out_dir, "write analytic.csv here instead of stdout");
  an->add_option("--config", f.config, "JSON with an optional \"scenario\" object");
  an->add_flag("--exact-na", exact, "use the truncated sum for the idle-VRB factor");

  auto* sim = app.add_subcommand("simulate", "Monte Carlo runs of one (rho, p) point");
  std::string algo = "random";
  bool persist = false;
  add_point_flags(sim, f, false);
  add_run_flags(sim, f);
  sim->add_option("--algo", algo, "leader policy")
      ->check(CLI::IsMember({"random", "drl"}));
  sim->add_option("--out-dir", f.out_dir, "write results, model and training curve here");
  sim->add_flag("--persist-agent", persist, "carry one DRL agent across all runs");

  auto* sw = app.add_subcommand("sweep", "run every point of a JSON sweep spec");
  std::string spec_path;
  sw->add_option("--spec", spec_path, "sweep spec or earlier results.json")
      ->required()
      ->check(CLI::ExistingFile);
  add_point_flags(sw, f, true);
  add_run_flags(sw, f);
  sw->add_option("--out-dir", f.out_dir, "write results.csv and results.json here");

  auto* ex = app.add_subcommand("export-sensing", "leader and last-member sensing matrices");
  std::string ex_algo = "random";
  int run = 0;
  add_point_flags(ex, f, false);
  ex->add_option("--seed", f.seed, "master seed");
  ex->add_option("--periods", f.periods, "periods to record (default 100)");
  ex->add_option("--config", f.config, "JSON with optional \"scenario\" and \"drl\" objects");
  ex->add_option("--algo", ex_algo, "leader policy")->check(CLI::IsMember({"random", "drl"}));
  ex->add_option("--run", run, "run index inside the point");
  ex->add_option("--out-dir", f.out_dir, "output directory (default .)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*an) return cmd_analytic(f, exact);
    if (*sim) return cmd_simulate(f, algo, persist);
    if (*sw) return cmd_sweep(f, spec_path);
    if (*ex) return cmd_export_sensing(f, ex_algo, run);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
