#pragma once

#include <span>
#include <string_view>
#include <vector>

namespace rssiloc::filters {

/// Scalar random-walk Kalman filter state over RSSI in dBm.
struct KalmanState {
  double estimate = 0.0;             // dBm
  double error_cov = 0.0;            // dBm^2
  double process_noise_q = 0.05;     // dBm^2 per step
  double measurement_noise_r = 4.0;  // dBm^2
};

struct KalmanParams {
  double q = 0.05;
  double r = 4.0;
};

/// Predict (covariance grows by q) then update toward `measurement`.
KalmanState kalman_step(const KalmanState& state, double measurement);

/// Gain used by the update of kalman_step for the given prior state.
double kalman_gain(const KalmanState& state);

/// Runs the filter over a stream. The state starts at the first measurement
/// with error covariance r, so the first output equals the first input.
std::vector<double> kalman_run(std::span<const double> measurements, const KalmanParams& params = {});

enum class OutlierMode { MinMax, Iqr };

std::string_view to_string(OutlierMode mode);
/// Accepts "minmax"/"min_max" and "iqr" (case-insensitive).
OutlierMode parse_outlier_mode(std::string_view text);

struct LookbackConfig {
  int k = 5;
  OutlierMode outlier_mode = OutlierMode::MinMax;
};

/// Quantile by linear interpolation between order statistics (numpy's default).
/// `sorted` must be non-empty and ascending.
double quantile_linear(std::span<const double> sorted, double q);

/// Reduces a window of readings to one robust value:
///  1. drop outliers (MinMax: one minimum and one maximum, skipped for
///     windows of two or fewer; Iqr: outside [Q1 - 1.5 IQR, Q3 + 1.5 IQR]),
///  2. mean and population deviation of the survivors,
///  3. drop values outside [mean - sd, mean + sd],
///  4. mean of what remains.
/// A stage that would leave nothing falls back to the previous stage's mean.
double lookback_reduce(std::span<const double> window, const LookbackConfig& config);

/// lookback_reduce over the trailing min(k, j+1) values at each index j.
std::vector<double> lookback_stream(std::span<const double> samples, const LookbackConfig& config);

/// Kalman smoothing followed by look-back reduction of the estimates.
std::vector<double> hybrid_stream(std::span<const double> samples, const KalmanParams& kalman,
                                  const LookbackConfig& lookback);

}  // namespace rssiloc::filters
