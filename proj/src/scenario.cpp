#include "platoon/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace platoon {

namespace {

struct Decimal {
  long long mantissa;
  int exponent;  // value = mantissa * 10^-exponent
};

// Durations are given as short decimals (50, 0.5, 0.125); recover the exact
// decimal so divisibility is decided on integers.
Decimal to_decimal(double x, const char* what) {
  double scale = 1.0;
  for (int e = 0; e <= 9; ++e, scale *= 10.0) {
    const double scaled = x * scale;
    const double rounded = std::round(scaled);
    if (std::abs(scaled - rounded) <= 1e-9 * std::max(1.0, std::abs(scaled)))
      return {static_cast<long long>(rounded), e};
  }
  throw ConfigError(std::string(what) + " is not a finite decimal");
}

long long pow10(int e) {
  long long r = 1;
  while (e-- > 0) r *= 10;
  return r;
}

}  // namespace

void ScenarioConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (!(road_length_km > 0.0)) fail("road_length_km must be positive");
  if (!(transmission_range_km > 0.0)) fail("transmission_range_km must be positive");
  if (!(platoon_length_km >= 0.0)) fail("platoon_length_km must be non-negative");
  if (!(density_rho > 0.0)) fail("density_rho must be positive");
  if (!(road_length_km > 2.0 * (transmission_range_km + platoon_length_km)))
    fail("road_length_km must exceed 2*(R + d) so the leader's neighbourhood fits on the road");
  if (!(period_ms > 0.0) || !(slot_ms > 0.0)) fail("period_ms and slot_ms must be positive");
  if (subchannels < 1) fail("subchannels must be >= 1");
  if (sps_periods < 1) fail("sps_periods must be >= 1");
  if (!(keep_prob >= 0.0 && keep_prob <= 1.0)) fail("keep_prob must lie in [0, 1]");
  if (periods_per_run < 1) fail("periods_per_run must be >= 1");
  if (runs_per_point < 1) fail("runs_per_point must be >= 1");
  n_virtual_blocks(*this);
}

int n_virtual_blocks(const ScenarioConfig& cfg) {
  const Decimal period = to_decimal(cfg.period_ms, "period_ms");
  const Decimal slot = to_decimal(cfg.slot_ms, "slot_ms");
  const int e = std::max(period.exponent, slot.exponent);
  const long long p = period.mantissa * pow10(e - period.exponent);
  const long long s = slot.mantissa * pow10(e - slot.exponent);
  if (s <= 0 || p <= 0) throw ConfigError("period_ms and slot_ms must be positive");
  if (p % s != 0)
    throw ConfigError("period_ms must be an integer multiple of slot_ms");
  if (cfg.subchannels < 1) throw ConfigError("subchannels must be >= 1");
  const long long n = (p / s) * cfg.subchannels;
  if (n > 1'000'000) throw ConfigError("resource grid too large");
  return static_cast<int>(n);
}

std::size_t vehicle_count(const ScenarioConfig& cfg) {
  const double n = cfg.road_length_km * cfg.density_rho;
  return static_cast<std::size_t>(std::floor(n + 1e-9));
}

Topology Topology::from_positions(std::vector<double> positions,
                                  double road_length_km,
                                  double platoon_length_km) {
  if (positions.empty()) throw ConfigError("topology needs at least one vehicle");
  std::sort(positions.begin(), positions.end());
  Topology t;
  t.positions = std::move(positions);
  const double mid = road_length_km / 2.0;
  std::size_t best = 0;
  for (std::size_t i = 1; i < t.positions.size(); ++i)
    if (std::abs(t.positions[i] - mid) < std::abs(t.positions[best] - mid)) best = i;
  t.pl_index = best;
  t.last_pm_position = t.positions[best] + platoon_length_km;
  return t;
}

Topology place_vehicles(const ScenarioConfig& cfg, Rng& rng) {
  const std::size_t n = vehicle_count(cfg);
  if (n == 0) throw ConfigError("road_length_km * density_rho yields zero vehicles");
  std::uniform_real_distribution<double> pos(0.0, cfg.road_length_km);
  std::vector<double> positions(n);
  for (auto& x : positions) x = pos(rng);
  return Topology::from_positions(std::move(positions), cfg.road_length_km,
                                  cfg.platoon_length_km);
}

IndexRange vehicles_within(const Topology& topo, double center, double range) {
  const auto& p = topo.positions;
  auto lo = std::lower_bound(p.begin(), p.end(), center - range);
  auto hi = std::upper_bound(lo, p.end(), center + range);
  return {static_cast<std::size_t>(lo - p.begin()),
          static_cast<std::size_t>(hi - p.begin())};
}

std::vector<std::size_t> interferer_set(const Topology& topo,
                                        const ScenarioConfig& cfg) {
  const double r = cfg.transmission_range_km;
  const double pl = topo.pl_position();
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < topo.n_vehicles(); ++i) {
    if (i == topo.pl_index) continue;
    const double x = topo.positions[i];
    if (std::abs(x - pl) <= r || std::abs(x - topo.last_pm_position) <= r)
      out.push_back(i);
  }
  return out;
}

}  // namespace platoon
