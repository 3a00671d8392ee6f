#include "rssiloc/filters.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "rssiloc/error.hpp"

namespace rssiloc::filters {

double kalman_gain(const KalmanState& state) {
  const double predicted = state.error_cov + state.process_noise_q;
  return predicted / (predicted + state.measurement_noise_r);
}

KalmanState kalman_step(const KalmanState& state, double measurement) {
  if (!std::isfinite(measurement)) throw InputError("kalman_step: measurement must be finite");
  if (!(state.process_noise_q > 0.0) || !(state.measurement_noise_r > 0.0) || !(state.error_cov >= 0.0)) {
    throw InputError("kalman_step: need q > 0, r > 0 and error_cov >= 0");
  }
  KalmanState next = state;
  next.error_cov = state.error_cov + state.process_noise_q;
  const double gain = next.error_cov / (next.error_cov + state.measurement_noise_r);
  next.estimate = state.estimate + gain * (measurement - state.estimate);
  next.error_cov *= (1.0 - gain);
  return next;
}

std::vector<double> kalman_run(std::span<const double> measurements, const KalmanParams& params) {
  if (measurements.empty()) throw InputError("kalman_run: empty measurement list");
  if (!std::isfinite(measurements.front())) throw InputError("kalman_run: measurement must be finite");
  std::vector<double> out;
  out.reserve(measurements.size());
  KalmanState state{measurements.front(), params.r, params.q, params.r};
  out.push_back(state.estimate);
  for (std::size_t i = 1; i < measurements.size(); ++i) {
    state = kalman_step(state, measurements[i]);
    out.push_back(state.estimate);
  }
  return out;
}

std::string_view to_string(OutlierMode mode) { return mode == OutlierMode::MinMax ? "minmax" : "iqr"; }

OutlierMode parse_outlier_mode(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "minmax" || lower == "min_max" || lower == "min-max") return OutlierMode::MinMax;
  if (lower == "iqr") return OutlierMode::Iqr;
  throw InputError("unknown outlier mode '" + std::string(text) + "' (expected minmax or iqr)");
}

double quantile_linear(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw InputError("quantile of an empty set");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

namespace {

double mean_of(std::span<const double> values) {
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

double population_sd(std::span<const double> values, double mean) {
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size()));
}

}  // namespace

double lookback_reduce(std::span<const double> window, const LookbackConfig& config) {
  if (window.empty()) throw InputError("lookback_reduce: empty window");
  for (double v : window) {
    if (!std::isfinite(v)) throw InputError("lookback_reduce: non-finite value in window");
  }

  // Everything below works on sorted values, which makes the result
  // independent of the order inside the window.
  std::vector<double> values(window.begin(), window.end());
  std::sort(values.begin(), values.end());

  // Stage 1: outliers.
  std::vector<double> kept;
  if (config.outlier_mode == OutlierMode::MinMax) {
    if (values.size() <= 2) {
      kept = values;
    } else {
      kept.assign(values.begin() + 1, values.end() - 1);
    }
  } else {
    const double q1 = quantile_linear(values, 0.25);
    const double q3 = quantile_linear(values, 0.75);
    const double iqr = q3 - q1;
    const double lo = q1 - 1.5 * iqr;
    const double hi = q3 + 1.5 * iqr;
    for (double v : values) {
      if (v >= lo && v <= hi) kept.push_back(v);
    }
  }
  if (kept.empty()) return mean_of(values);

  // Stages 2-3: one-sigma trim around the survivors' mean.
  const double mu = mean_of(kept);
  const double sd = population_sd(kept, mu);
  // Two survivors sit exactly on the band edges; the slack keeps rounding in
  // mu and sd from dropping one of them.
  const double band = sd + 1e-12 * (sd + std::max(1.0, std::abs(mu)));
  std::vector<double> trimmed;
  for (double v : kept) {
    if (std::abs(v - mu) <= band) trimmed.push_back(v);
  }
  if (trimmed.empty()) return mu;

  // Stage 4.
  return mean_of(trimmed);
}

std::vector<double> lookback_stream(std::span<const double> samples, const LookbackConfig& config) {
  if (samples.empty()) throw InputError("lookback_stream: empty sample list");
  if (config.k < 1) throw InputError("lookback_stream: k must be >= 1");
  std::vector<double> out;
  out.reserve(samples.size());
  const auto k = static_cast<std::size_t>(config.k);
  for (std::size_t j = 0; j < samples.size(); ++j) {
    const std::size_t len = std::min(k, j + 1);
    out.push_back(lookback_reduce(samples.subspan(j + 1 - len, len), config));
  }
  return out;
}

std::vector<double> hybrid_stream(std::span<const double> samples, const KalmanParams& kalman,
                                  const LookbackConfig& lookback) {
  const auto smoothed = kalman_run(samples, kalman);
  return lookback_stream(smoothed, lookback);
}

}  // namespace rssiloc::filters
