// Exhaustive oracles on worlds small enough to enumerate every random branch.

#include <array>
#include <cmath>

#include "doctest.h"
#include "platoon/agents.hpp"
#include "platoon/analytic.hpp"

using namespace platoon;

namespace {

constexpr int kVrb = 8;
constexpr int kPeriods = 3;
constexpr int kTs = 2;
constexpr double kRange = 0.05;
constexpr double kKeep = 0.5;

ScenarioConfig toy_config() {
  ScenarioConfig c;
  c.road_length_km = 0.2;
  c.transmission_range_km = kRange;
  c.platoon_length_km = 0.02;
  c.period_ms = 4;
  c.slot_ms = 1;
  c.subchannels = 2;
  c.sps_periods = kTs;
  c.keep_prob = kKeep;
  return c;
}

// Vehicle 2 leads (0.10, last member at 0.12). 0.16 is hidden from the
// leader but heard by the last member; 0.03 interferes with nobody.
const std::vector<double> kPos{0.03, 0.07, 0.10, 0.13, 0.16};
constexpr int kN = 5;
constexpr int kLeader = 2;

struct ToyState {
  std::array<int, kN> vrb{};
  std::array<int, kN> remaining{};
  std::array<int, kN> last{};  // -1 = silent
};

bool hears(int owner, int other) {
  return other != owner && std::abs(kPos[owner] - kPos[other]) <= kRange;
}

bool interferes(int v) {
  return v != kLeader && (std::abs(kPos[v] - kPos[kLeader]) <= kRange ||
                          std::abs(kPos[v] - (kPos[kLeader] + 0.02)) <= kRange);
}

std::array<bool, kVrb> busy_row(const ToyState& s, int owner) {
  std::array<bool, kVrb> b{};
  for (int j = 0; j < kN; ++j)
    if (hears(owner, j) && s.last[j] >= 0) b[s.last[j]] = true;
  return b;
}

// Independent re-statement of the per-period rules; accumulates the
// probability-weighted collision indicator of each period.
void explore(const ToyState& s, int n, double weight, int pl_prev,
             std::array<double, kPeriods>& collide) {
  if (n == kPeriods) return;
  // Boundary vehicles, enumerated one at a time.
  std::vector<int> boundary;
  for (int v = 0; v < kN; ++v)
    if (v != kLeader && s.remaining[v] == 0) boundary.push_back(v);

  const int branches = 1 << boundary.size();
  for (int mask = 0; mask < branches; ++mask) {
    ToyState t = s;
    double w = weight;
    for (std::size_t k = 0; k < boundary.size(); ++k) {
      const int v = boundary[k];
      const bool keep = (mask >> k) & 1;
      w *= keep ? kKeep : 1 - kKeep;
      if (!keep) {
        const auto b = busy_row(s, v);
        for (int d = 1; d < kVrb; ++d) {
          const int m = (s.vrb[v] + d) % kVrb;
          if (!b[m]) {
            t.vrb[v] = m;
            break;
          }
        }
      }
      t.remaining[v] = kTs;
    }
    for (int v = 0; v < kN; ++v)
      if (v != kLeader) --t.remaining[v];

    const auto pl_busy = busy_row(s, kLeader);
    std::vector<int> idle;
    for (int m = 0; m < kVrb; ++m)
      if (!pl_busy[m]) idle.push_back(m);
    if (idle.empty()) idle.push_back(pl_prev >= 0 ? pl_prev : 0);

    // Only broadcasters hearing the leader at the next boundary care which
    // VRB it picked; otherwise one representative branch suffices.
    bool matters = false;
    if (n + 1 < kPeriods)
      for (int v = 0; v < kN; ++v)
        if (v != kLeader && t.remaining[v] == 0 && hears(v, kLeader)) matters = true;

    for (std::size_t i = 0; i < idle.size(); ++i) {
      const int a = idle[i];
      bool hit = false;
      for (int v = 0; v < kN; ++v)
        if (interferes(v) && t.vrb[v] == a) hit = true;
      const double wi = w / idle.size();
      if (hit) collide[n] += wi;
      if (!matters && i > 0) continue;
      ToyState next = t;
      for (int v = 0; v < kN; ++v) next.last[v] = v == kLeader ? a : t.vrb[v];
      explore(next, n + 1, matters ? wi : w, a, collide);
    }
  }
}

std::array<double, kPeriods> enumerate_exact() {
  std::array<double, kPeriods> collide{};
  const std::vector<int> others{0, 1, 3, 4};
  const int combos = 1 << (3 * 4);  // 8^4 initial VRB assignments
  for (int code = 0; code < combos; ++code)
    for (int phases = 0; phases < 16; ++phases) {
      ToyState s;
      s.vrb[kLeader] = -1;
      s.last[kLeader] = -1;
      for (int k = 0; k < 4; ++k) {
        const int v = others[k];
        s.vrb[v] = (code >> (3 * k)) & 7;
        s.remaining[v] = (phases >> k) & 1;
        s.last[v] = s.vrb[v];
      }
      explore(s, 0, 1.0 / (combos * 16.0), -1, collide);
    }
  return collide;
}

}  // namespace

TEST_SUITE("toy_oracle") {

TEST_CASE("exhaustive enumeration matches Monte Carlo of the simulator") {
  const ScenarioConfig cfg = toy_config();
  REQUIRE(n_virtual_blocks(cfg) == kVrb);
  const Topology topo = Topology::from_positions(kPos, cfg.road_length_km, cfg.platoon_length_km);
  REQUIRE(topo.pl_index == static_cast<std::size_t>(kLeader));
  {
    std::vector<std::size_t> want;
    for (int v = 0; v < kN; ++v)
      if (interferes(v)) want.push_back(v);
    REQUIRE(interferer_set(topo, cfg) == want);
  }

  const auto exact = enumerate_exact();

  const int runs = 100000;
  std::array<double, kPeriods> hits{};
  for (int r = 0; r < runs; ++r) {
    Rng wr(derive_seed(2024, {static_cast<std::uint64_t>(r), 1}));
    Rng ar(derive_seed(2024, {static_cast<std::uint64_t>(r), 2}));
    World w = init_world(topo, cfg, wr);
    RandomAgent agent;
    for (int n = 0; n < kPeriods; ++n) hits[n] += episode_step(w, agent, wr, ar).outcome.collided;
  }
  for (int n = 0; n < kPeriods; ++n) {
    const double est = hits[n] / runs;
    const double se = std::sqrt(exact[n] * (1 - exact[n]) / runs);
    MESSAGE("period " << n << ": exact " << exact[n] << ", Monte Carlo " << est);
    CHECK(exact[n] > 0.0);
    CHECK(std::abs(est - exact[n]) <= 3 * se);
  }
}

TEST_CASE("idle-scan length from enumerated occupancy agrees with the closed sum") {
  // For every toy grid, derive the per-VRB busy probability by enumerating
  // every assignment of K vehicles, then take the expected scan length
  // sum_{h} P(first h candidate VRBs busy) with independently occupied VRBs.
  for (int nr = 2; nr <= 8; ++nr)
    for (int k = 0; k <= 4; ++k) {
      if (nr <= (k + 1) / 2.0) continue;  // outside the model's domain
      std::size_t total = 1;
      for (int i = 0; i < k; ++i) total *= nr;
      std::size_t busy0 = 0;
      for (std::size_t code = 0; code < total; ++code) {
        std::size_t c = code;
        bool hit = false;
        for (int i = 0; i < k; ++i, c /= nr) hit |= (c % nr) == 0;
        busy0 += hit;
      }
      const double q = static_cast<double>(busy0) / total;

      double expected_scan = 0;
      const int slots = nr - 2;  // h runs over 0..N_r-2
      for (int pattern = 0; pattern < (1 << slots); ++pattern) {
        int busy = 0;
        for (int i = 0; i < slots; ++i) busy += (pattern >> i) & 1;
        const double w = std::pow(q, busy) * std::pow(1 - q, slots - busy);
        int scan = 1;  // h = 0 always counts
        for (int i = 0; i < slots && ((pattern >> i) & 1); ++i) ++scan;
        expected_scan += w * scan;
      }

      analytic::Inputs in;
      in.n_vrb = nr;
      in.range_km = 0.5;
      in.rho = k + 1;  // 2 R rho - 1 = k
      in.platoon_km = 0;
      CHECK_MESSAGE(std::abs(analytic::n_a_exact(in) - expected_scan) < 1e-9,
                    "N_r=" << nr << " K=" << k);
    }
}

}  // TEST_SUITE
