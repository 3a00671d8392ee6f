#include "rssiloc/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rssiloc/error.hpp"
#include "rssiloc/pathloss.hpp"
#include "rssiloc/random.hpp"

namespace rssiloc::simulator {

void validate(const NoiseModel& noise) {
  if (!(noise.shadowing_sigma >= 0.0) || !std::isfinite(noise.shadowing_sigma)) {
    throw InputError("shadowing sigma must be finite and >= 0");
  }
  if (noise.sample_period <= 0) throw InputError("sample period must be > 0");
  // Neighbouring ticks may move toward each other by 2 * jitter.
  if (noise.jitter < 0 || 2 * noise.jitter >= noise.sample_period) {
    throw InputError("jitter must be in [0, sample_period / 2)");
  }
}

namespace {

double orient(const Position& a, const Position& b, const Position& c) {
  return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

int sign(double v) { return (v > 0.0) - (v < 0.0); }

bool on_segment(const Position& a, const Position& b, const Position& p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

}  // namespace

bool segments_intersect(const Position& a, const Position& b, const Position& c, const Position& d) {
  const int o1 = sign(orient(a, b, c));
  const int o2 = sign(orient(a, b, d));
  const int o3 = sign(orient(c, d, a));
  const int o4 = sign(orient(c, d, b));
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(a, b, c)) return true;
  if (o2 == 0 && on_segment(a, b, d)) return true;
  if (o3 == 0 && on_segment(c, d, a)) return true;
  if (o4 == 0 && on_segment(c, d, b)) return true;
  return false;
}

double wall_loss(const std::vector<Wall>& walls, const Position& from, const Position& to) {
  double loss = 0.0;
  for (const auto& w : walls) {
    if (segments_intersect(from, to, w.a, w.b)) loss += w.attenuation_db;
  }
  return loss;
}

double expected_rssi(const BeaconConfig& beacon, const Position& target, const std::vector<Wall>& walls) {
  const double d = std::max(euclidean(beacon.position, target), kMinDistance);
  return pathloss::distance_to_rssi(pathloss::model_of(beacon), d) - wall_loss(walls, beacon.position, target);
}

SimulationResult simulate(const Scenario& scenario, const NoiseModel& noise, const SimulationOptions& options) {
  rssiloc::validate(scenario);
  validate(noise);

  static const std::vector<Wall> kNoWalls;
  const auto& walls = options.walls ? scenario.walls : kNoWalls;
  const std::size_t nb = scenario.beacons.size();

  struct Tagged {
    RssiSample sample;
    std::size_t beacon_index;
  };
  std::vector<Tagged> tagged;
  SimulationResult result;

  for (std::size_t iv = 0; iv < scenario.ground_truth.size(); ++iv) {
    const auto& interval = scenario.ground_truth[iv];
    for (std::size_t bi = 0; bi < nb; ++bi) {
      const auto& beacon = scenario.beacons[bi];
      const double distance = euclidean(beacon.position, interval.position);
      if (distance < kCoincidentDistance) {
        result.warnings.push_back("target of interval " + std::to_string(iv) + " coincides with beacon '" +
                                  beacon.beacon_id + "'; distance clamped to " + std::to_string(kMinDistance) +
                                  " m");
      }
      const double mean = expected_rssi(beacon, interval.position, walls);
      Rng rng(derive_seed(noise.seed, iv * nb + bi));
      for (std::int64_t j = 0;; ++j) {
        const TimestampMs nominal = interval.start + noise.jitter + j * noise.sample_period;
        if (nominal + noise.jitter > interval.end) break;
        const TimestampMs offset = noise.jitter > 0 ? rng.uniform_int(-noise.jitter, noise.jitter) : 0;
        const double shadowing = noise.shadowing_sigma > 0.0 ? noise.shadowing_sigma * rng.normal() : 0.0;
        tagged.push_back({{nominal + offset, beacon.beacon_id, options.target_id, mean + shadowing}, bi});
      }
    }
  }

  std::stable_sort(tagged.begin(), tagged.end(), [](const Tagged& x, const Tagged& y) {
    if (x.sample.timestamp != y.sample.timestamp) return x.sample.timestamp < y.sample.timestamp;
    return x.beacon_index < y.beacon_index;
  });
  result.trace.reserve(tagged.size());
  for (auto& t : tagged) result.trace.push_back(std::move(t.sample));
  return result;
}

}  // namespace rssiloc::simulator
