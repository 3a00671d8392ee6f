#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "rssiloc/types.hpp"

namespace rssiloc::simulator {

/// Log-normal shadowing plus sampling cadence of a synthetic receiver.
struct NoiseModel {
  double shadowing_sigma = 0.0;  // dB
  std::uint64_t seed = 0;
  TimestampMs sample_period = 8000;
  TimestampMs jitter = 1000;  // uniform +/- jitter around the nominal tick
};

/// Requires sigma >= 0, period > 0 and 0 <= 2 * jitter < period, so each
/// beacon's timestamps are strictly increasing.
void validate(const NoiseModel& noise);

struct SimulationOptions {
  bool walls = true;
  TargetId target_id = "target";
};

struct SimulationResult {
  std::vector<RssiSample> trace;  // sorted by timestamp, then beacon order
  std::vector<std::string> warnings;
};

/// Distances below this are treated as this value by the propagation model.
inline constexpr double kMinDistance = 0.1;
/// Targets closer than this to a beacon trigger a clamping warning.
inline constexpr double kCoincidentDistance = 1e-3;

/// True when the closed segments [a, b] and [c, d] share at least one point.
bool segments_intersect(const Position& a, const Position& b, const Position& c, const Position& d);

/// Summed attenuation of walls crossed by the straight path from -> to.
double wall_loss(const std::vector<Wall>& walls, const Position& from, const Position& to);

/// Noise-free received strength at `beacon` for an emitter at `target`.
double expected_rssi(const BeaconConfig& beacon, const Position& target,
                     const std::vector<Wall>& walls);

/// Generates readings for every beacon during every ground-truth interval.
///
/// Each (interval, beacon) stream draws from its own generator seeded with
/// derive_seed(noise.seed, interval * beacons + beacon), so streams are
/// independent of generation order. Sample j of a stream is taken at
/// start + jitter + j*period + U{-jitter, ..., +jitter} for as long as the
/// latest possible tick stays inside the interval.
SimulationResult simulate(const Scenario& scenario, const NoiseModel& noise,
                          const SimulationOptions& options = {});

/// Home: bedroom, study room and hallway with one ceiling beacon per room.
Scenario home_scenario();
/// Office: meeting room with two beacons and a hallway with one.
Scenario office_scenario();

struct BuiltinScenarios {
  Scenario home;
  Scenario office;
};
BuiltinScenarios builtin_scenarios();

/// "home" or "office"; throws InputError otherwise.
Scenario builtin_scenario(std::string_view name);

/// Duration of one stationary ground-truth interval in the fixtures.
inline constexpr TimestampMs kFixtureIntervalMs = 15 * 60 * 1000;
/// Walking gap between consecutive fixture intervals.
inline constexpr TimestampMs kFixtureGapMs = 60 * 1000;

}  // namespace rssiloc::simulator
