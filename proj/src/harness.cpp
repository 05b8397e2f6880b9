#include "platoon/harness.hpp"

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <map>
#include <memory>

#include "platoon/analytic.hpp"
#include "platoon/config_io.hpp"

namespace platoon {

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::random: return "random";
    case Algorithm::drl: return "drl";
    case Algorithm::analytic: return "analytic";
  }
  return "unknown";
}

Algorithm parse_algorithm(const std::string& s) {
  if (s == "random") return Algorithm::random;
  if (s == "drl") return Algorithm::drl;
  if (s == "analytic") return Algorithm::analytic;
  throw ConfigError("unknown algorithm '" + s + "' (expected random, drl or analytic)");
}

int measure_start(const ScenarioConfig& cfg, Algorithm algo) {
  const int warm = cfg.warmup_periods();
  if (cfg.periods_per_run <= warm)
    throw ConfigError("periods_per_run (" + std::to_string(cfg.periods_per_run) +
                      ") leaves no measured periods after the warm-up of " +
                      std::to_string(warm));
  if (algo == Algorithm::drl) return std::max(warm, cfg.periods_per_run / 2);
  return warm;
}

std::uint64_t point_seed(const ScenarioConfig& cfg) {
  return derive_seed(cfg.seed, {std::bit_cast<std::uint64_t>(cfg.density_rho),
                                std::bit_cast<std::uint64_t>(cfg.keep_prob)});
}

namespace {

std::unique_ptr<Policy> make_policy(const PointOptions& opt, int n_vrb, Rng& agent_rng) {
  if (opt.algorithm == Algorithm::drl)
    return std::make_unique<DrlAgent>(n_vrb, opt.drl, agent_rng);
  return std::make_unique<RandomAgent>();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

RunStats run_single(const ScenarioConfig& cfg, const PointOptions& opt, int run_index,
                    RunArtifacts* artifacts, Policy* agent) {
  if (opt.algorithm == Algorithm::analytic)
    throw ConfigError("the analytic algorithm has no simulation runs");
  const int warm = cfg.warmup_periods();
  const int from = measure_start(cfg, opt.algorithm);

  const std::uint64_t run_seed =
      derive_seed(point_seed(cfg), {static_cast<std::uint64_t>(run_index)});
  Rng world_rng(derive_seed(run_seed, {static_cast<std::uint64_t>(Stream::world)}));
  Rng agent_rng(derive_seed(run_seed, {static_cast<std::uint64_t>(Stream::agent)}));

  World world = init_world(place_vehicles(cfg, world_rng), cfg, world_rng);

  std::unique_ptr<Policy> owned;
  if (agent == nullptr) {
    owned = make_policy(opt, world.n_vrb(), agent_rng);
    agent = owned.get();
  } else if (auto* drl = dynamic_cast<DrlAgent*>(agent)) {
    drl->reset_episode();
  }
  const std::size_t sat_before = agent->saturation_events();

  RunStats st;
  double window_loss = 0.0;
  int window_loss_n = 0;
  int window_coll = 0;
  for (int n = 0; n < cfg.periods_per_run; ++n) {
    const StepRecord rec = episode_step(world, *agent, world_rng, agent_rng);
    const int hit = rec.outcome.collided ? 1 : 0;
    if (n >= warm) {
      ++st.full_periods;
      st.full_collisions += hit;
    }
    if (n >= from) {
      ++st.measured_periods;
      st.collisions += hit;
    }
    if (artifacts == nullptr) continue;
    if (artifacts->capture_sensing) {
      artifacts->pl_rows.push_back(world.pl_sensing());
      artifacts->last_pm_rows.push_back(world.last_pm_sensing());
    }
    if (artifacts->capture_curve) {
      if (!std::isnan(rec.loss)) {
        window_loss += rec.loss;
        ++window_loss_n;
      }
      window_coll += hit;
      if ((n + 1) % artifacts->curve_window == 0) {
        const double loss = window_loss_n > 0 ? window_loss / window_loss_n
                                              : std::numeric_limits<double>::quiet_NaN();
        artifacts->curve.push_back(
            {n + 1, loss, static_cast<double>(window_coll) / artifacts->curve_window});
        window_loss = 0.0;
        window_loss_n = 0;
        window_coll = 0;
      }
    }
  }
  st.leader_saturations = agent->saturation_events() - sat_before;
  st.sps_saturations = world.counters().saturation_events;
  if (artifacts != nullptr) {
    if (auto* drl = dynamic_cast<DrlAgent*>(agent)) artifacts->network = drl->network();
  }
  return st;
}

ExperimentResult aggregate(const ScenarioConfig& cfg, Algorithm algo,
                           const std::vector<RunStats>& runs) {
  ExperimentResult r;
  r.rho = cfg.density_rho;
  r.p = cfg.keep_prob;
  r.algorithm = algo;
  r.runs = static_cast<int>(runs.size());
  r.periods = cfg.periods_per_run;
  r.seed = point_seed(cfg);
  r.warmup_periods = cfg.warmup_periods();
  r.measure_from = measure_start(cfg, algo);
  for (const auto& s : runs) {
    r.collisions += s.collisions;
    r.measured_periods += s.measured_periods;
    r.full_collisions += s.full_collisions;
    r.full_periods += s.full_periods;
    r.leader_saturations += s.leader_saturations;
    r.sps_saturations += s.sps_saturations;
  }
  if (r.measured_periods > 0) {
    const double n = static_cast<double>(r.measured_periods);
    r.p_c_ht = static_cast<double>(r.collisions) / n;
    r.std_error = std::sqrt(r.p_c_ht * (1.0 - r.p_c_ht) / n);
  }
  if (r.full_periods > 0)
    r.full_rate = static_cast<double>(r.full_collisions) / static_cast<double>(r.full_periods);
  return r;
}

namespace {

ExperimentResult run_point_impl(const ScenarioConfig& cfg, const PointOptions& opt,
                                RunArtifacts* run0, bool parallel) {
  if (opt.algorithm == Algorithm::analytic) return analytic_point(cfg);
  cfg.validate();
  measure_start(cfg, opt.algorithm);  // reject empty measurement windows up front

  const auto t0 = std::chrono::steady_clock::now();
  const int n = cfg.runs_per_point;
  std::vector<RunStats> stats(n);
  std::vector<std::string> errors(n);
  std::vector<char> ok(n, 0);

  auto one = [&](int i, Policy* agent) {
    try {
      stats[i] = run_single(cfg, opt, i, i == 0 ? run0 : nullptr, agent);
      ok[i] = 1;
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  };

  if (opt.algorithm == Algorithm::drl && opt.persist_agent) {
    // One agent learns through every run in order, so runs cannot overlap.
    Rng init_rng(derive_seed(point_seed(cfg), {static_cast<std::uint64_t>(Stream::agent)}));
    DrlAgent agent(n_virtual_blocks(cfg), opt.drl, init_rng);
    for (int i = 0; i < n; ++i) one(i, &agent);
  } else if (parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (int i = 0; i < n; ++i) one(i, nullptr);
  } else {
    for (int i = 0; i < n; ++i) one(i, nullptr);
  }

  std::vector<RunStats> good;
  std::string diag;
  for (int i = 0; i < n; ++i) {
    if (ok[i]) {
      good.push_back(stats[i]);
    } else {
      if (!diag.empty()) diag += "; ";
      diag += "run " + std::to_string(i) + ": " + errors[i];
    }
  }
  ExperimentResult r = aggregate(cfg, opt.algorithm, good);
  r.runs = n;
  r.failed = good.size() != static_cast<std::size_t>(n);
  r.diagnostics = diag;
  r.wall_time_s = seconds_since(t0);
  return r;
}

}  // namespace

ExperimentResult run_point(const ScenarioConfig& cfg, const PointOptions& opt,
                           RunArtifacts* run0) {
  return run_point_impl(cfg, opt, run0, true);
}

ExperimentResult run_point_serial(const ScenarioConfig& cfg, const PointOptions& opt,
                                  RunArtifacts* run0) {
  return run_point_impl(cfg, opt, run0, false);
}

ExperimentResult analytic_point(const ScenarioConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  analytic::Inputs in;
  in.n_vrb = n_virtual_blocks(cfg);
  in.range_km = cfg.transmission_range_km;
  in.rho = cfg.density_rho;
  in.platoon_km = cfg.platoon_length_km;
  in.keep_prob = cfg.keep_prob;
  in.sps_periods = cfg.sps_periods;

  ExperimentResult r;
  r.rho = cfg.density_rho;
  r.p = cfg.keep_prob;
  r.algorithm = Algorithm::analytic;
  r.seed = point_seed(cfg);
  r.warmup_periods = cfg.warmup_periods();
  try {
    r.p_c_ht = analytic::p_collision_ht(in);
  } catch (const std::exception& e) {
    r.failed = true;
    r.diagnostics = e.what();
  }
  r.full_rate = r.p_c_ht;
  r.wall_time_s = seconds_since(t0);
  return r;
}

void SweepSpec::validate() const {
  if (densities.empty()) throw ConfigError("sweep needs at least one density");
  if (keep_probs.empty()) throw ConfigError("sweep needs at least one keep probability");
  if (algorithms.empty()) throw ConfigError("sweep needs at least one algorithm");
  if (runs_per_point < 1) throw ConfigError("runs_per_point must be >= 1");
  for (double rho : densities)
    for (double p : keep_probs) {
      const ScenarioConfig c = point_config(rho, p);
      c.validate();
      for (Algorithm a : algorithms)
        if (a != Algorithm::analytic) measure_start(c, a);
    }
  drl.validate();
}

ScenarioConfig SweepSpec::point_config(double rho, double p) const {
  ScenarioConfig c = scenario;
  c.density_rho = rho;
  c.keep_prob = p;
  c.runs_per_point = runs_per_point;
  c.periods_per_run = periods_per_run;
  return c;
}

bool SweepOutcome::any_failed() const {
  for (const auto& r : results)
    if (r.failed) return true;
  return false;
}

SweepOutcome run_sweep(const SweepSpec& spec) {
  spec.validate();
  struct Task {
    double rho, p;
    Algorithm algo;
  };
  std::vector<Task> tasks;
  for (double rho : spec.densities)
    for (double p : spec.keep_probs)
      for (Algorithm a : spec.algorithms) tasks.push_back({rho, p, a});

  SweepOutcome out;
  out.results.resize(tasks.size());
  const long n = static_cast<long>(tasks.size());
  // Points are scheduled across threads; runs inside a point stay on the
  // thread that owns it (nested regions are inactive by default).
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < n; ++i) {
    PointOptions opt;
    opt.algorithm = tasks[i].algo;
    opt.drl = spec.drl;
    opt.persist_agent = spec.persist_agent;
    out.results[i] = run_point(spec.point_config(tasks[i].rho, tasks[i].p), opt);
  }
  out.comparison = compare(out.results);
  return out;
}

std::vector<ComparisonRow> compare(const std::vector<ExperimentResult>& results) {
  std::vector<ComparisonRow> rows;
  std::map<std::pair<double, double>, std::size_t> index;
  for (const auto& r : results) {
    const auto key = std::make_pair(r.rho, r.p);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, rows.size()).first;
      rows.push_back({r.rho, r.p, {}, {}, {}, {}});
    }
    if (r.failed) continue;
    auto& row = rows[it->second];
    switch (r.algorithm) {
      case Algorithm::analytic: row.analytic = r.p_c_ht; break;
      case Algorithm::random: row.random = r.p_c_ht; break;
      case Algorithm::drl: row.drl = r.p_c_ht; break;
    }
  }
  for (auto& row : rows)
    if (row.random && row.drl && *row.random > 0.0) row.reduction = 1.0 - *row.drl / *row.random;
  return rows;
}

std::string results_csv(const std::vector<ExperimentResult>& results) {
  std::string out = kResultsCsvHeader;
  out += '\n';
  char buf[512];
  for (const auto& r : results) {
    std::snprintf(buf, sizeof buf, "%.10g,%.10g,%s,%d,%d,%llu,%.10g,%.6g,%llu,%.3f\n", r.rho,
                  r.p, to_string(r.algorithm).c_str(), r.runs, r.periods,
                  static_cast<unsigned long long>(r.collisions), r.p_c_ht, r.std_error,
                  static_cast<unsigned long long>(r.seed), r.wall_time_s);
    out += buf;
  }
  return out;
}

void emit_results(const SweepOutcome& outcome, const SweepSpec& spec,
                  const std::string& out_dir) {
  if (outcome.results.empty()) throw std::invalid_argument("no results to emit");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("cannot create " + out_dir + ": " + ec.message());

  const json spec_json = spec;
  json doc;
  doc["version"] = PLATOON_VERSION;
  doc["config_hash"] = config_hash(spec_json);
  doc["master_seed"] = spec.scenario.seed;
  doc["spec"] = spec_json;
  doc["results"] = outcome.results;
  json cmp = json::array();
  for (const auto& c : outcome.comparison) {
    json row{{"rho", c.rho}, {"p", c.p}};
    row["analytic"] = c.analytic ? json(*c.analytic) : json(nullptr);
    row["random"] = c.random ? json(*c.random) : json(nullptr);
    row["drl"] = c.drl ? json(*c.drl) : json(nullptr);
    row["reduction"] = c.reduction ? json(*c.reduction) : json(nullptr);
    cmp.push_back(row);
  }
  doc["comparison"] = cmp;

  const std::filesystem::path dir(out_dir);
  write_text_file((dir / "results.csv").string(), results_csv(outcome.results));
  write_text_file((dir / "results.json").string(), doc.dump(2) + "\n");
}

std::string sensing_csv(const std::vector<SensingRow>& busy_rows, const std::string& header) {
  std::string out = header;
  out += '\n';
  for (const auto& row : busy_rows) {
    for (std::size_t m = 0; m < row.size(); ++m) {
      if (m) out += ',';
      out += row[m] ? '0' : '1';
    }
    out += '\n';
  }
  return out;
}

std::string curve_csv(const std::vector<CurvePoint>& curve) {
  std::string out = "period,loss,rolling_collision_rate\n";
  char buf[128];
  for (const auto& c : curve) {
    std::snprintf(buf, sizeof buf, "%d,%.10g,%.6g\n", c.period, c.loss,
                  c.rolling_collision_rate);
    out += buf;
  }
  return out;
}

}  // namespace platoon
