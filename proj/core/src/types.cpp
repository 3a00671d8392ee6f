#include "rssiloc/types.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "rssiloc/error.hpp"

namespace rssiloc {

namespace {

bool finite(const Position& p) { return std::isfinite(p.x) && std::isfinite(p.y); }

}  // namespace

std::vector<BeaconId> Scenario::beacon_ids() const {
  std::vector<BeaconId> ids;
  ids.reserve(beacons.size());
  for (const auto& b : beacons) ids.push_back(b.beacon_id);
  return ids;
}

const BeaconConfig& Scenario::beacon(const BeaconId& id) const {
  auto it = std::find_if(beacons.begin(), beacons.end(),
                         [&](const BeaconConfig& b) { return b.beacon_id == id; });
  if (it == beacons.end()) throw InputError("unknown beacon '" + id + "' in scenario '" + name + "'");
  return *it;
}

double euclidean(const Position& a, const Position& b) { return std::hypot(a.x - b.x, a.y - b.y); }

void validate(const RssiSample& sample) {
  if (!std::isfinite(sample.rssi)) {
    throw InputError("non-finite rssi from beacon '" + sample.beacon_id + "'");
  }
  if (sample.timestamp < 0) {
    throw InputError("negative timestamp from beacon '" + sample.beacon_id + "'");
  }
}

void validate(const BeaconConfig& beacon) {
  if (beacon.beacon_id.empty()) throw InputError("beacon with empty id");
  if (!finite(beacon.position)) throw InputError("beacon '" + beacon.beacon_id + "' has non-finite position");
  if (!std::isfinite(beacon.a_ref)) throw InputError("beacon '" + beacon.beacon_id + "' has non-finite A");
  if (!(beacon.path_loss_exp >= kMinPathLossExp && beacon.path_loss_exp <= kMaxPathLossExp)) {
    throw InputError("beacon '" + beacon.beacon_id + "' path-loss exponent " +
                     std::to_string(beacon.path_loss_exp) + " outside [1.4, 5.1]");
  }
}

void validate(const Wall& wall) {
  if (!finite(wall.a) || !finite(wall.b)) throw InputError("wall with non-finite endpoint");
  if (wall.a == wall.b) throw InputError("wall endpoints coincide");
  if (!(wall.attenuation_db >= 0.0) || !std::isfinite(wall.attenuation_db)) {
    throw InputError("wall attenuation must be a finite value >= 0 dB");
  }
}

void validate(const Scenario& scenario) {
  const auto& beacons = scenario.beacons;
  if (beacons.size() < 3) {
    throw InputError("scenario '" + scenario.name + "' needs at least 3 beacons, has " +
                     std::to_string(beacons.size()));
  }
  std::set<BeaconId> ids;
  for (const auto& b : beacons) {
    validate(b);
    if (!ids.insert(b.beacon_id).second) {
      throw InputError("duplicate beacon id '" + b.beacon_id + "' in scenario '" + scenario.name + "'");
    }
  }

  double span2 = 0.0;
  for (const auto& a : beacons)
    for (const auto& b : beacons) span2 = std::max(span2, std::pow(euclidean(a.position, b.position), 2));
  bool spread = false;
  for (std::size_t i = 0; i < beacons.size() && !spread; ++i) {
    for (std::size_t j = i + 1; j < beacons.size() && !spread; ++j) {
      for (std::size_t k = j + 1; k < beacons.size() && !spread; ++k) {
        const auto& p = beacons[i].position;
        const auto& q = beacons[j].position;
        const auto& r = beacons[k].position;
        double cross = (q.x - p.x) * (r.y - p.y) - (q.y - p.y) * (r.x - p.x);
        spread = std::abs(cross) > 1e-9 * span2;
      }
    }
  }
  if (!spread) throw InputError("scenario '" + scenario.name + "' has collinear beacons");

  for (const auto& w : scenario.walls) validate(w);

  const auto& b = scenario.bounds;
  if (!(b.max_x > b.min_x && b.max_y > b.min_y)) {
    throw InputError("scenario '" + scenario.name + "' has empty bounds");
  }

  const auto& gt = scenario.ground_truth;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt[i].start < 0 || gt[i].end < gt[i].start) {
      throw InputError("ground-truth interval " + std::to_string(i) + " is not a valid [start, end]");
    }
    if (!finite(gt[i].position)) throw InputError("ground-truth interval " + std::to_string(i) + " has non-finite position");
    if (i > 0 && gt[i].start <= gt[i - 1].end) {
      throw InputError("ground-truth intervals " + std::to_string(i - 1) + " and " + std::to_string(i) +
                       " overlap or are out of order");
    }
  }
}

}  // namespace rssiloc
