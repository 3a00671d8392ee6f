#include "rssiloc/pathloss.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <tuple>

#include "rssiloc/error.hpp"
#include "rssiloc/io.hpp"
#include "rssiloc/trilateration.hpp"

namespace rssiloc::pathloss {

PathLossModel model_of(const BeaconConfig& beacon) { return {beacon.a_ref, beacon.path_loss_exp}; }

namespace {

void check_model(const PathLossModel& model) {
  if (!(model.path_loss_exp > 0.0) || !std::isfinite(model.path_loss_exp) || !std::isfinite(model.a_ref)) {
    throw InputError("path-loss model needs finite A and n > 0");
  }
}

}  // namespace

double rssi_to_distance(const PathLossModel& model, double rssi) {
  check_model(model);
  if (!std::isfinite(rssi)) throw InputError("rssi must be finite");
  return std::pow(10.0, (model.a_ref - rssi) / (10.0 * model.path_loss_exp));
}

double distance_to_rssi(const PathLossModel& model, double distance) {
  check_model(model);
  if (!(distance > 0.0) || !std::isfinite(distance)) throw InputError("distance must be finite and > 0");
  return model.a_ref - 10.0 * model.path_loss_exp * std::log10(distance);
}

std::vector<double> CalibrationGrid::range(double first, double last, double step) {
  if (!(step > 0.0)) throw InputError("grid step must be > 0");
  std::vector<double> values;
  const auto count = static_cast<long>(std::floor((last - first) / step + 1e-9));
  for (long i = 0; i <= count; ++i) {
    // Round to 1e-9 so that e.g. 1.4 + 11*0.1 prints and compares as 2.5.
    values.push_back(std::round((first + static_cast<double>(i) * step) * 1e9) / 1e9);
  }
  return values;
}

CalibrationGrid CalibrationGrid::defaults() { return {range(-95.0, -55.0, 1.0), range(1.4, 5.1, 0.1)}; }

CalibrationResult calibrate(std::span<const CalibrationPoint> labeled, std::span<const BeaconConfig> beacons,
                            const CalibrationGrid& grid) {
  if (labeled.empty()) throw InputError("calibration needs at least one labeled point");
  if (grid.a_values.empty() || grid.n_values.empty()) throw InputError("calibration grid is empty");
  if (beacons.size() < 3) throw InputError("calibration needs at least 3 beacons");
  for (const auto& point : labeled) {
    for (const auto& b : beacons) {
      if (!point.rssi.contains(b.beacon_id)) {
        throw InputError("calibration point at t=" + std::to_string(point.timestamp) + " lacks beacon '" +
                         b.beacon_id + "'");
      }
    }
  }

  std::vector<trilateration::Anchor> anchors(beacons.size());
  for (std::size_t i = 0; i < beacons.size(); ++i) anchors[i].center = beacons[i].position;

  // Lexicographic order on (error, n, |A|) makes the argmin independent of visit order.
  auto better = [](const CalibrationResult& x, const CalibrationResult& y) {
    return std::make_tuple(x.mean_error, x.model.path_loss_exp, std::abs(x.model.a_ref)) <
           std::make_tuple(y.mean_error, y.model.path_loss_exp, std::abs(y.model.a_ref));
  };

  CalibrationResult best{{}, std::numeric_limits<double>::infinity()};
  bool found = false;
  for (double n : grid.n_values) {
    for (double a_ref : grid.a_values) {
      const PathLossModel model{a_ref, n};
      double total = 0.0;
      for (const auto& point : labeled) {
        for (std::size_t i = 0; i < beacons.size(); ++i) {
          anchors[i].distance = rssi_to_distance(model, point.rssi.at(beacons[i].beacon_id));
        }
        total += euclidean(trilateration::trilaterate(anchors).position, point.truth);
      }
      CalibrationResult candidate{model, total / static_cast<double>(labeled.size())};
      if (!found || better(candidate, best)) {
        best = candidate;
        found = true;
      }
    }
  }
  return best;
}

std::vector<CalibrationPoint> read_calibration(std::istream& in, const std::string& source) {
  std::vector<CalibrationPoint> points;
  io::read_csv(in, source, kCalibrationHeader, 5, [&](const std::vector<std::string>& f, std::size_t line) {
    const TimestampMs t = io::parse_int(f[0]);
    const double rssi = io::parse_double(f[2]);
    const Position truth{io::parse_double(f[3]), io::parse_double(f[4])};
    if (f[1].empty()) throw InputError("empty beacon_id");
    if (!std::isfinite(rssi)) throw InputError("non-finite rssi");
    if (points.empty() || points.back().timestamp != t) {
      points.push_back({t, {}, truth});
    } else if (!(points.back().truth == truth)) {
      throw ParseError(source, line, "rows of timestamp " + std::to_string(t) + " disagree on the true position");
    }
    if (!points.back().rssi.emplace(f[1], rssi).second) {
      throw ParseError(source, line, "beacon '" + f[1] + "' repeated at timestamp " + std::to_string(t));
    }
  });
  return points;
}

std::vector<CalibrationPoint> load_calibration(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
  return read_calibration(in, path.string());
}

void write_calibration(std::ostream& out, std::span<const CalibrationPoint> points) {
  out << kCalibrationHeader << '\n';
  for (const auto& p : points) {
    for (const auto& [beacon, rssi] : p.rssi) {
      out << p.timestamp << ',' << beacon << ',' << io::format_double(rssi) << ',' << io::format_double(p.truth.x)
          << ',' << io::format_double(p.truth.y) << '\n';
    }
  }
}

}  // namespace rssiloc::pathloss
