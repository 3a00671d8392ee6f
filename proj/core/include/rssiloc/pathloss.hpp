#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "rssiloc/types.hpp"

namespace rssiloc::pathloss {

/// Log-distance model: d = 10^((A - rssi) / (10 n)).
struct PathLossModel {
  double a_ref = -67.0;        // A, dBm measured at 1 m
  double path_loss_exp = 2.5;  // n

  friend bool operator==(const PathLossModel&, const PathLossModel&) = default;
};

PathLossModel model_of(const BeaconConfig& beacon);

/// Distance in meters for a received strength in dBm. Throws InputError on
/// non-finite rssi or a non-positive exponent.
double rssi_to_distance(const PathLossModel& model, double rssi);
/// Inverse of rssi_to_distance; throws InputError for distance <= 0.
double distance_to_rssi(const PathLossModel& model, double distance);

/// One labeled observation: a reading from every beacon at a known spot.
struct CalibrationPoint {
  TimestampMs timestamp = 0;
  std::map<BeaconId, double> rssi;
  Position truth;
};

/// Candidate values for the grid search. Both axes are evaluated exhaustively.
struct CalibrationGrid {
  std::vector<double> a_values;
  std::vector<double> n_values;

  /// n in {1.4, 1.5, ..., 5.1}, A in {-95, ..., -55}.
  static CalibrationGrid defaults();
  /// Inclusive arithmetic range; values are computed as first + i*step to avoid drift.
  static std::vector<double> range(double first, double last, double step);
};

struct CalibrationResult {
  PathLossModel model;
  double mean_error = 0.0;  // meters, trilateration error at the winning cell
};

/// Grid search for the (A, n) pair minimizing mean trilateration error over
/// the labeled points. The model is shared by all beacons. Ties go to the
/// smaller n, then to the smaller |A|.
CalibrationResult calibrate(std::span<const CalibrationPoint> labeled,
                            std::span<const BeaconConfig> beacons,
                            const CalibrationGrid& grid);

// Calibration CSV: timestamp_ms,beacon_id,rssi_dbm,true_x_m,true_y_m.
// Rows sharing a timestamp form one CalibrationPoint.
inline constexpr std::string_view kCalibrationHeader = "timestamp_ms,beacon_id,rssi_dbm,true_x_m,true_y_m";
std::vector<CalibrationPoint> read_calibration(std::istream& in, const std::string& source = "<calibration>");
std::vector<CalibrationPoint> load_calibration(const std::filesystem::path& path);
void write_calibration(std::ostream& out, std::span<const CalibrationPoint> points);

}  // namespace rssiloc::pathloss
