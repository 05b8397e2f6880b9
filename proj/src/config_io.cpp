#include "platoon/config_io.hpp"

#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <set>

namespace platoon {

namespace {

void reject_unknown(const json& j, const char* what, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ConfigError(std::string(what) + " must be a JSON object");
  const std::set<std::string> known(keys.begin(), keys.end());
  for (const auto& item : j.items())
    if (!known.count(item.key()))
      throw ConfigError(std::string("unknown field '") + item.key() + "' in " + what);
}

template <class T>
void get_opt(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) it->get_to(out);
}

}  // namespace

void to_json(json& j, const ScenarioConfig& c) {
  j = json{{"road_length_km", c.road_length_km},
           {"transmission_range_km", c.transmission_range_km},
           {"density_rho", c.density_rho},
           {"platoon_length_km", c.platoon_length_km},
           {"period_ms", c.period_ms},
           {"subchannels", c.subchannels},
           {"slot_ms", c.slot_ms},
           {"sps_periods", c.sps_periods},
           {"keep_prob", c.keep_prob},
           {"periods_per_run", c.periods_per_run},
           {"runs_per_point", c.runs_per_point},
           {"seed", c.seed}};
}

void from_json(const json& j, ScenarioConfig& c) {
  reject_unknown(j, "scenario",
                 {"road_length_km", "transmission_range_km", "density_rho",
                  "platoon_length_km", "period_ms", "subchannels", "slot_ms", "sps_periods",
                  "keep_prob", "periods_per_run", "runs_per_point", "seed"});
  get_opt(j, "road_length_km", c.road_length_km);
  get_opt(j, "transmission_range_km", c.transmission_range_km);
  get_opt(j, "density_rho", c.density_rho);
  get_opt(j, "platoon_length_km", c.platoon_length_km);
  get_opt(j, "period_ms", c.period_ms);
  get_opt(j, "subchannels", c.subchannels);
  get_opt(j, "slot_ms", c.slot_ms);
  get_opt(j, "sps_periods", c.sps_periods);
  get_opt(j, "keep_prob", c.keep_prob);
  get_opt(j, "periods_per_run", c.periods_per_run);
  get_opt(j, "runs_per_point", c.runs_per_point);
  get_opt(j, "seed", c.seed);
}

void to_json(json& j, const QNetShape& s) {
  j = json{{"history", s.history}, {"in_channels", s.in_channels}, {"kernel", s.kernel},
           {"conv1", s.conv1},     {"conv2", s.conv2},             {"fc1", s.fc1},
           {"fc2", s.fc2},         {"actions", s.actions}};
}

void from_json(const json& j, QNetShape& s) {
  reject_unknown(j, "network shape",
                 {"history", "in_channels", "kernel", "conv1", "conv2", "fc1", "fc2", "actions"});
  get_opt(j, "history", s.history);
  get_opt(j, "in_channels", s.in_channels);
  get_opt(j, "kernel", s.kernel);
  get_opt(j, "conv1", s.conv1);
  get_opt(j, "conv2", s.conv2);
  get_opt(j, "fc1", s.fc1);
  get_opt(j, "fc2", s.fc2);
  get_opt(j, "actions", s.actions);
}

void to_json(json& j, const DrlHyperParams& h) {
  j = json{{"learning_rate", h.learning_rate},
           {"gamma", h.gamma},
           {"epsilon_initial", h.epsilon_initial},
           {"epsilon_min", h.epsilon_min},
           {"epsilon_decay", h.epsilon_decay},
           {"batch_size", h.batch_size},
           {"memory_size", h.memory_size},
           {"decay_interval_periods", h.decay_interval_periods},
           {"masked_target", h.masked_target},
           {"grad_clip_norm", h.grad_clip_norm},
           {"shape", h.shape}};
}

void from_json(const json& j, DrlHyperParams& h) {
  reject_unknown(j, "drl",
                 {"learning_rate", "gamma", "epsilon_initial", "epsilon_min", "epsilon_decay",
                  "batch_size", "memory_size", "decay_interval_periods", "masked_target",
                  "grad_clip_norm", "shape"});
  get_opt(j, "learning_rate", h.learning_rate);
  get_opt(j, "gamma", h.gamma);
  get_opt(j, "epsilon_initial", h.epsilon_initial);
  get_opt(j, "epsilon_min", h.epsilon_min);
  get_opt(j, "epsilon_decay", h.epsilon_decay);
  get_opt(j, "batch_size", h.batch_size);
  get_opt(j, "memory_size", h.memory_size);
  get_opt(j, "decay_interval_periods", h.decay_interval_periods);
  get_opt(j, "masked_target", h.masked_target);
  get_opt(j, "grad_clip_norm", h.grad_clip_norm);
  get_opt(j, "shape", h.shape);
}

void to_json(json& j, const SweepSpec& s) {
  std::vector<std::string> algos;
  for (Algorithm a : s.algorithms) algos.push_back(to_string(a));
  j = json{{"scenario", s.scenario},
           {"densities", s.densities},
           {"keep_probs", s.keep_probs},
           {"algorithms", algos},
           {"runs_per_point", s.runs_per_point},
           {"periods_per_run", s.periods_per_run},
           {"drl", s.drl},
           {"persist_agent", s.persist_agent}};
}

void from_json(const json& j, SweepSpec& s) {
  reject_unknown(j, "sweep spec",
                 {"scenario", "densities", "keep_probs", "algorithms", "runs_per_point",
                  "periods_per_run", "drl", "persist_agent"});
  get_opt(j, "scenario", s.scenario);
  get_opt(j, "densities", s.densities);
  get_opt(j, "keep_probs", s.keep_probs);
  if (auto it = j.find("algorithms"); it != j.end()) {
    s.algorithms.clear();
    for (const auto& a : *it) s.algorithms.push_back(parse_algorithm(a.get<std::string>()));
  }
  get_opt(j, "runs_per_point", s.runs_per_point);
  get_opt(j, "periods_per_run", s.periods_per_run);
  get_opt(j, "drl", s.drl);
  get_opt(j, "persist_agent", s.persist_agent);
}

void to_json(json& j, const ExperimentResult& r) {
  j = json{{"rho", r.rho},
           {"p", r.p},
           {"algorithm", to_string(r.algorithm)},
           {"runs", r.runs},
           {"periods", r.periods},
           {"collisions", r.collisions},
           {"p_c_ht", r.p_c_ht},
           {"stderr", r.std_error},
           {"seed", r.seed},
           {"wall_time_s", r.wall_time_s},
           {"warmup_periods", r.warmup_periods},
           {"measure_from", r.measure_from},
           {"measured_periods", r.measured_periods},
           {"full_collisions", r.full_collisions},
           {"full_periods", r.full_periods},
           {"full_rate", r.full_rate},
           {"leader_saturations", r.leader_saturations},
           {"sps_saturations", r.sps_saturations},
           {"failed", r.failed},
           {"diagnostics", r.diagnostics}};
}

void from_json(const json& j, ExperimentResult& r) {
  reject_unknown(j, "result",
                 {"rho", "p", "algorithm", "runs", "periods", "collisions", "p_c_ht", "stderr",
                  "seed", "wall_time_s", "warmup_periods", "measure_from", "measured_periods",
                  "full_collisions", "full_periods", "full_rate", "leader_saturations",
                  "sps_saturations", "failed", "diagnostics"});
  get_opt(j, "rho", r.rho);
  get_opt(j, "p", r.p);
  if (auto it = j.find("algorithm"); it != j.end())
    r.algorithm = parse_algorithm(it->get<std::string>());
  get_opt(j, "runs", r.runs);
  get_opt(j, "periods", r.periods);
  get_opt(j, "collisions", r.collisions);
  get_opt(j, "p_c_ht", r.p_c_ht);
  get_opt(j, "stderr", r.std_error);
  get_opt(j, "seed", r.seed);
  get_opt(j, "wall_time_s", r.wall_time_s);
  get_opt(j, "warmup_periods", r.warmup_periods);
  get_opt(j, "measure_from", r.measure_from);
  get_opt(j, "measured_periods", r.measured_periods);
  get_opt(j, "full_collisions", r.full_collisions);
  get_opt(j, "full_periods", r.full_periods);
  get_opt(j, "full_rate", r.full_rate);
  get_opt(j, "leader_saturations", r.leader_saturations);
  get_opt(j, "sps_saturations", r.sps_saturations);
  get_opt(j, "failed", r.failed);
  get_opt(j, "diagnostics", r.diagnostics);
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + path);
}

std::string config_hash(const json& j) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : j.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json network_sidecar(const QNetwork& q, const DrlHyperParams& hyper) {
  json tensors = json::array();
  for (const auto& t : q.tensors())
    tensors.push_back({{"name", t.name}, {"offset", t.offset}, {"size", t.size}});
  return json{{"format", "float64-le"},
              {"parameter_count", q.params().size()},
              {"shape", q.shape()},
              {"hyper", hyper},
              {"tensors", tensors},
              {"version", PLATOON_VERSION}};
}

}  // namespace platoon
