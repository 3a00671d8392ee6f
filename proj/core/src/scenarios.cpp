#include <string>

#include "rssiloc/error.hpp"
#include "rssiloc/simulator.hpp"

namespace rssiloc::simulator {

namespace {

// Interior wall attenuations.
constexpr double kBrickDb = 8.0;
constexpr double kPlasterboardDb = 3.0;

Position center(const Bounds& b) { return {(b.min_x + b.max_x) / 2.0, (b.min_y + b.max_y) / 2.0}; }

std::vector<GroundTruthInterval> stationary_intervals(const std::vector<Position>& spots) {
  std::vector<GroundTruthInterval> out;
  for (std::size_t i = 0; i < spots.size(); ++i) {
    const auto start = static_cast<TimestampMs>(i) * (kFixtureIntervalMs + kFixtureGapMs);
    out.push_back({start, start + kFixtureIntervalMs, spots[i]});
  }
  return out;
}

}  // namespace

Scenario home_scenario() {
  Scenario s;
  s.name = "home";
  // Bedroom 2.50 x 3.29, study room 2.50 x 1.00 north of it, hallway
  // 2.34 x 2.21 to the east sharing a wall with both.
  const Room bedroom{"bedroom", {0.0, 0.0, 2.5, 3.29}};
  const Room study{"study", {0.0, 3.29, 2.5, 4.29}};
  const Room hallway{"hallway", {2.5, 2.08, 4.84, 4.29}};
  s.rooms = {bedroom, study, hallway};
  s.bounds = {0.0, 0.0, 4.84, 4.29};

  // One ceiling luminaire at the center of each room.
  s.beacons = {
      {"bedroom", center(bedroom.extent), -87.0, 2.5},
      {"study", center(study.extent), -87.0, 2.5},
      {"hallway", center(hallway.extent), -87.0, 2.5},
  };
  s.walls = {
      {{0.0, 3.29}, {2.5, 3.29}, kBrickDb},  // bedroom | study
      {{2.5, 2.08}, {2.5, 4.29}, kBrickDb},  // bedroom, study | hallway
  };
  // Standing spots, away from the luminaire directly overhead.
  s.ground_truth = stationary_intervals({{0.75, 0.9}, {0.6, 3.6}, {4.3, 2.7}});
  return s;
}

Scenario office_scenario() {
  Scenario s;
  s.name = "office";
  const Room meeting{"meeting", {0.0, 0.0, 5.6, 7.8}};
  const Room hallway{"hallway", {5.6, 0.0, 7.2, 5.6}};
  s.rooms = {meeting, hallway};
  s.bounds = {0.0, 0.0, 7.2, 7.8};

  // Two luminaires in the meeting room (window side, wall side), one in the hallway.
  s.beacons = {
      {"meeting_window", {2.8, 1.95}, -67.0, 2.5},
      {"meeting_wall", {2.8, 5.85}, -67.0, 2.5},
      {"hallway", {6.4, 2.8}, -67.0, 2.5},
  };
  s.walls = {
      {{5.6, 0.0}, {5.6, 5.6}, kPlasterboardDb},  // meeting | hallway
  };
  // Three spots in the meeting room, then two in the hallway.
  s.ground_truth = stationary_intervals({{1.5, 1.2}, {4.2, 3.9}, {1.6, 6.6}, {6.4, 0.9}, {6.5, 4.8}});
  return s;
}

BuiltinScenarios builtin_scenarios() { return {home_scenario(), office_scenario()}; }

Scenario builtin_scenario(std::string_view name) {
  if (name == "home") return home_scenario();
  if (name == "office") return office_scenario();
  throw InputError("unknown builtin scenario '" + std::string(name) + "' (expected home or office)");
}

}  // namespace rssiloc::simulator
