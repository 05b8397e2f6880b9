#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "platoon/rng.hpp"

namespace platoon {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Static world parameters. Defaults are the reference highway setup:
// 4 km road, 400 m range, 100 m platoon, 50 ms BSM period split into
// 0.5 ms slots with two sub-channels, SPS period of 10 transmission periods.
struct ScenarioConfig {
  double road_length_km = 4.0;
  double transmission_range_km = 0.4;
  double density_rho = 100.0;        // vehicles/km
  double platoon_length_km = 0.1;
  double period_ms = 50.0;
  int subchannels = 2;
  double slot_ms = 0.5;
  int sps_periods = 10;
  double keep_prob = 0.9;
  int periods_per_run = 10000;
  int runs_per_point = 50;
  std::uint64_t seed = 1;

  // Throws ConfigError naming the first violated constraint.
  void validate() const;

  // Periods excluded from collision statistics at the start of each run.
  int warmup_periods() const { return 2 * sps_periods; }
};

/// Number of virtual resource blocks per transmission period,
/// period/slot * sub-channels. Throws ConfigError if the period is not an
/// exact multiple of the slot duration.
int n_virtual_blocks(const ScenarioConfig& cfg);

// Number of vehicles drawn onto the road: floor(length * density).
std::size_t vehicle_count(const ScenarioConfig& cfg);

struct Topology {
  std::vector<double> positions;  // km, ascending
  std::size_t pl_index = 0;
  double last_pm_position = 0.0;  // km; a receiver only, not a transmitter

  std::size_t n_vehicles() const { return positions.size(); }
  double pl_position() const { return positions[pl_index]; }

  // Builds a topology from explicit positions (sorted internally). The
  // leader is the vehicle nearest mid-road.
  static Topology from_positions(std::vector<double> positions,
                                 double road_length_km,
                                 double platoon_length_km);
};

/// Places floor(L*rho) vehicles i.i.d. uniform on [0, L] and picks the one
/// nearest L/2 as platoon leader. Pure function of (cfg, rng state).
Topology place_vehicles(const ScenarioConfig& cfg, Rng& rng);

/// Vehicles other than the leader that can collide with a leader
/// transmission: within R of the leader or within R of the last member.
std::vector<std::size_t> interferer_set(const Topology& topo,
                                        const ScenarioConfig& cfg);

// Index range [first, last) of vehicles with |pos - center| <= range.
struct IndexRange {
  std::size_t first = 0;
  std::size_t last = 0;
};
IndexRange vehicles_within(const Topology& topo, double center, double range);

}  // namespace platoon
