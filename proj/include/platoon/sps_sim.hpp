#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "platoon/rng.hpp"
#include "platoon/scenario.hpp"

namespace platoon {

// One entry per VRB; 1 = busy, 0 = idle. CSV export flips this (1 = idle).
using SensingRow = std::vector<std::uint8_t>;

struct SpsVehicleState {
  int current_vrb = 0;
  int periods_remaining = 0;  // reselection is evaluated when this hits 0
  int phase_offset = 0;
};

struct PeriodOutcome {
  int pl_vrb = -1;
  bool collided = false;
  std::vector<std::size_t> colliders;
};

enum class Feedback : std::uint8_t { nack = 0, ack = 1 };

inline Feedback feedback(const PeriodOutcome& outcome) {
  return outcome.collided ? Feedback::nack : Feedback::ack;
}

/// First idle VRB strictly after `current`, walking forward cyclically.
/// Returns nullopt when every other VRB is busy.
std::optional<int> closest_idle_forward(const SensingRow& row, int current);

struct ReselectResult {
  SpsVehicleState state;
  bool kept = false;
  bool saturated = false;  // wanted to move but sensed no idle VRB
};

/// SPS boundary decision: keep with probability keep_prob, otherwise move to
/// the closest idle VRB of the vehicle's own previous-period sensing.
/// `own_row` may be null only when the draw keeps; it is requested lazily
/// through `row_fn` so callers avoid building rows for keepers.
template <class RowFn>
ReselectResult sps_reselect(const SpsVehicleState& s, double keep_prob,
                            int sps_periods, RowFn&& row_fn, Rng& rng) {
  ReselectResult r{s, true, false};
  r.state.periods_remaining = sps_periods;
  if (uniform01(rng) < keep_prob) return r;
  r.kept = false;
  if (auto next = closest_idle_forward(row_fn(), s.current_vrb)) {
    r.state.current_vrb = *next;
  } else {
    r.kept = true;
    r.saturated = true;
  }
  return r;
}

struct WorldCounters {
  std::size_t reselection_events = 0;  // boundaries evaluated
  std::size_t keep_events = 0;
  std::size_t moves = 0;
  std::size_t saturation_events = 0;
};

/// Period-stepped SPS world. Every vehicle except the leader is an SPS
/// broadcaster; the leader's VRB is supplied by a policy each period.
/// Single-threaded; one instance per run.
class World {
 public:
  World(Topology topo, const ScenarioConfig& cfg,
        std::vector<SpsVehicleState> initial);

  const Topology& topology() const { return topo_; }
  int n_vrb() const { return n_vrb_; }
  std::size_t period() const { return period_; }
  const std::vector<std::size_t>& interferers() const { return interferers_; }
  const std::vector<SpsVehicleState>& vehicles() const { return state_; }
  const WorldCounters& counters() const { return counters_; }

  // VRB each vehicle transmitted on in the last completed period
  // (-1 = did not transmit). Before the first step this is the initial
  // assignment, with the leader silent.
  const std::vector<int>& last_transmissions() const { return last_tx_; }

  // Sensing rows over the last completed period.
  SensingRow sensing_row(std::size_t owner) const;
  SensingRow sensing_at(double position) const;
  const SensingRow& pl_sensing() const { return pl_row_; }
  const SensingRow& last_pm_sensing() const { return pm_row_; }

  /// Advances one transmission period with the leader on `pl_vrb`.
  PeriodOutcome step(int pl_vrb, Rng& rng);

 private:
  void fill_row(IndexRange range, std::size_t exclude, SensingRow& row) const;
  void refresh_receiver_rows();

  Topology topo_;
  double range_km_;
  double keep_prob_;
  int sps_periods_;
  int n_vrb_;
  std::vector<std::size_t> interferers_;
  std::vector<IndexRange> neighbours_;
  IndexRange pm_neighbours_;
  std::vector<SpsVehicleState> state_;
  std::vector<int> last_tx_;
  std::vector<int> current_tx_;
  SensingRow pl_row_;
  SensingRow pm_row_;
  SensingRow scratch_;
  std::size_t period_ = 0;
  WorldCounters counters_;
};

/// Independent uniform VRB and SPS phase per broadcaster; the leader's slot
/// is left at VRB -1 in the returned vector.
std::vector<SpsVehicleState> initial_states(const Topology& topo,
                                            const ScenarioConfig& cfg, Rng& rng);

World init_world(const Topology& topo, const ScenarioConfig& cfg, Rng& rng);

/// Every vehicle's sensing row for the world's last completed period.
/// OpenMP-parallel across vehicles.
std::vector<SensingRow> all_sensing_rows(const World& world);
// Serial reference of all_sensing_rows, brute force over all vehicle pairs.
std::vector<SensingRow> all_sensing_rows_reference(const World& world,
                                                   double range_km);

}  // namespace platoon
