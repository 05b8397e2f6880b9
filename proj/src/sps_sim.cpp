#include "platoon/sps_sim.hpp"

#include <cmath>

namespace platoon {

std::optional<int> closest_idle_forward(const SensingRow& row, int current) {
  const int n = static_cast<int>(row.size());
  for (int d = 1; d < n; ++d) {
    const int m = (current + d) % n;
    if (row[m] == 0) return m;
  }
  return std::nullopt;
}

std::vector<SpsVehicleState> initial_states(const Topology& topo,
                                            const ScenarioConfig& cfg, Rng& rng) {
  const int n_vrb = n_virtual_blocks(cfg);
  std::uniform_int_distribution<int> vrb(0, n_vrb - 1);
  std::uniform_int_distribution<int> phase(0, cfg.sps_periods - 1);
  std::vector<SpsVehicleState> out(topo.n_vehicles());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (i == topo.pl_index) {
      out[i] = {-1, 0, 0};
      continue;
    }
    const int v = vrb(rng);
    const int ph = phase(rng);
    out[i] = {v, ph, ph};
  }
  return out;
}

World init_world(const Topology& topo, const ScenarioConfig& cfg, Rng& rng) {
  return World(topo, cfg, initial_states(topo, cfg, rng));
}

World::World(Topology topo, const ScenarioConfig& cfg,
             std::vector<SpsVehicleState> initial)
    : topo_(std::move(topo)),
      range_km_(cfg.transmission_range_km),
      keep_prob_(cfg.keep_prob),
      sps_periods_(cfg.sps_periods),
      n_vrb_(n_virtual_blocks(cfg)),
      state_(std::move(initial)) {
  if (state_.size() != topo_.n_vehicles())
    throw ConfigError("initial state count does not match vehicle count");
  interferers_ = interferer_set(topo_, cfg);
  neighbours_.reserve(topo_.n_vehicles());
  for (double x : topo_.positions) neighbours_.push_back(vehicles_within(topo_, x, range_km_));
  pm_neighbours_ = vehicles_within(topo_, topo_.last_pm_position, range_km_);

  last_tx_.assign(topo_.n_vehicles(), -1);
  for (std::size_t i = 0; i < state_.size(); ++i) {
    if (i == topo_.pl_index) continue;
    const auto& s = state_[i];
    if (s.current_vrb < 0 || s.current_vrb >= n_vrb_)
      throw ConfigError("initial VRB out of range");
    last_tx_[i] = s.current_vrb;
  }
  current_tx_ = last_tx_;
  refresh_receiver_rows();
}

void World::fill_row(IndexRange range, std::size_t exclude, SensingRow& row) const {
  row.assign(n_vrb_, 0);
  for (std::size_t j = range.first; j < range.last; ++j) {
    if (j == exclude) continue;
    const int v = last_tx_[j];
    if (v >= 0) row[v] = 1;
  }
}

void World::refresh_receiver_rows() {
  fill_row(neighbours_[topo_.pl_index], topo_.pl_index, pl_row_);
  fill_row(pm_neighbours_, topo_.n_vehicles(), pm_row_);
}

SensingRow World::sensing_row(std::size_t owner) const {
  SensingRow row;
  fill_row(neighbours_.at(owner), owner, row);
  return row;
}

SensingRow World::sensing_at(double position) const {
  SensingRow row;
  fill_row(vehicles_within(topo_, position, range_km_), topo_.n_vehicles(), row);
  return row;
}

PeriodOutcome World::step(int pl_vrb, Rng& rng) {
  if (pl_vrb < 0 || pl_vrb >= n_vrb_) throw std::out_of_range("leader VRB out of range");

  // Boundary decisions all read last period's transmissions.
  for (std::size_t i = 0; i < state_.size(); ++i) {
    if (i == topo_.pl_index) continue;
    auto& s = state_[i];
    if (s.periods_remaining == 0) {
      ++counters_.reselection_events;
      auto row_fn = [&]() -> const SensingRow& {
        fill_row(neighbours_[i], i, scratch_);
        return scratch_;
      };
      const auto r = sps_reselect(s, keep_prob_, sps_periods_, row_fn, rng);
      if (r.saturated) ++counters_.saturation_events;
      if (r.kept) ++counters_.keep_events;
      else ++counters_.moves;
      s.current_vrb = r.state.current_vrb;
      s.periods_remaining = r.state.periods_remaining;
    }
    --s.periods_remaining;
    current_tx_[i] = s.current_vrb;
  }
  current_tx_[topo_.pl_index] = pl_vrb;
  state_[topo_.pl_index].current_vrb = pl_vrb;

  PeriodOutcome out;
  out.pl_vrb = pl_vrb;
  for (std::size_t j : interferers_)
    if (current_tx_[j] == pl_vrb) out.colliders.push_back(j);
  out.collided = !out.colliders.empty();

  last_tx_.swap(current_tx_);
  ++period_;
  refresh_receiver_rows();
  return out;
}

std::vector<SensingRow> all_sensing_rows(const World& world) {
  const auto n = static_cast<long>(world.topology().n_vehicles());
  std::vector<SensingRow> rows(n);
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) rows[i] = world.sensing_row(static_cast<std::size_t>(i));
  return rows;
}

std::vector<SensingRow> all_sensing_rows_reference(const World& world,
                                                   double range_km) {
  const auto& pos = world.topology().positions;
  const auto& tx = world.last_transmissions();
  std::vector<SensingRow> rows(pos.size(), SensingRow(world.n_vrb(), 0));
  for (std::size_t i = 0; i < pos.size(); ++i)
    for (std::size_t j = 0; j < pos.size(); ++j)
      if (j != i && tx[j] >= 0 && std::abs(pos[j] - pos[i]) <= range_km)
        rows[i][tx[j]] = 1;
  return rows;
}

}  // namespace platoon
