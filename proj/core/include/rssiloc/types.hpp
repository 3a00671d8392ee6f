#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace rssiloc {

using BeaconId = std::string;
using TargetId = std::string;
using TimestampMs = std::int64_t;

/// Planar coordinate in meters. The emitter height is not modeled.
struct Position {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Position&, const Position&) = default;
};

/// One timestamped signal-strength reading of one target taken by one beacon.
struct RssiSample {
  TimestampMs timestamp = 0;
  BeaconId beacon_id;
  TargetId target_id;
  double rssi = 0.0;  // dBm

  friend bool operator==(const RssiSample&, const RssiSample&) = default;
};

/// A fixed receiver with its own log-distance calibration.
struct BeaconConfig {
  BeaconId beacon_id;
  Position position;
  double a_ref = -67.0;         // dBm at 1 m
  double path_loss_exp = 2.5;   // dimensionless

  friend bool operator==(const BeaconConfig&, const BeaconConfig&) = default;
};

/// Physical range accepted for the path-loss exponent of a beacon.
inline constexpr double kMinPathLossExp = 1.4;
inline constexpr double kMaxPathLossExp = 5.1;

struct Wall {
  Position a;
  Position b;
  double attenuation_db = 0.0;

  friend bool operator==(const Wall&, const Wall&) = default;
};

struct Bounds {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;

  double area() const { return (max_x - min_x) * (max_y - min_y); }
  bool contains(const Position& p) const {
    return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y;
  }

  friend bool operator==(const Bounds&, const Bounds&) = default;
};

/// Named axis-aligned room, kept for floor-area bookkeeping and documentation.
struct Room {
  std::string name;
  Bounds extent;

  friend bool operator==(const Room&, const Room&) = default;
};

/// Closed interval [start, end] during which the target stood still at `position`.
struct GroundTruthInterval {
  TimestampMs start = 0;
  TimestampMs end = 0;
  Position position;

  bool contains(TimestampMs t) const { return t >= start && t <= end; }

  friend bool operator==(const GroundTruthInterval&, const GroundTruthInterval&) = default;
};

struct Scenario {
  std::string name;
  std::vector<BeaconConfig> beacons;
  std::vector<Wall> walls;
  std::vector<Room> rooms;
  Bounds bounds;
  std::vector<GroundTruthInterval> ground_truth;

  std::vector<BeaconId> beacon_ids() const;
  const BeaconConfig& beacon(const BeaconId& id) const;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Output of any localization method at one instant.
struct PositionEstimate {
  TimestampMs timestamp = 0;
  Position position;
  double residual = 0.0;  // sum of squared circle-equation residuals
  std::string method_tag;
  int iterations = 0;
};

double euclidean(const Position& a, const Position& b);

/// Throws InputError on non-finite rssi or negative timestamp.
void validate(const RssiSample& sample);
/// Throws InputError when the exponent is outside [1.4, 5.1] or fields are non-finite.
void validate(const BeaconConfig& beacon);
void validate(const Wall& wall);
/// Checks beacon count, id uniqueness, collinearity and interval ordering.
void validate(const Scenario& scenario);

}  // namespace rssiloc
