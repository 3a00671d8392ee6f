#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rssiloc/filters.hpp"
#include "rssiloc/types.hpp"

namespace rssiloc::eval {

enum class MethodKind { Raw, Lookback, Kalman, Hybrid };

/// A per-beacon stream transform followed by trilateration.
struct Method {
  MethodKind kind = MethodKind::Raw;
  filters::LookbackConfig lookback;
  filters::KalmanParams kalman;

  /// Row label in the style of the published tables, e.g. "Look-back-50".
  std::string label() const;
  /// Canonical spec string accepted by parse_method, e.g. "hybrid:50:minmax".
  std::string spec() const;

  std::vector<double> transform(std::span<const double> samples) const;
};

/// Defaults applied to method specs that omit a parameter.
struct MethodDefaults {
  int k = 5;
  filters::OutlierMode outlier_mode = filters::OutlierMode::MinMax;
  filters::KalmanParams kalman;
};

/// raw | kalman | lookback[:k[:minmax|iqr]] | hybrid[:k[:minmax|iqr]]
Method parse_method(std::string_view spec, const MethodDefaults& defaults = {});
/// Comma-separated list of method specs, order preserved.
std::vector<Method> parse_methods(std::string_view list, const MethodDefaults& defaults = {});

inline constexpr TimestampMs kDefaultMaxStaleness = 30000;

/// Nearest-in-time reading of each beacon, in `beacons` order. Ties go to the
/// earlier sample. `trace` must be sorted by timestamp. Throws StalenessError
/// naming the first beacon without a sample within `max_staleness` ms.
std::vector<double> align(std::span<const RssiSample> trace, std::span<const BeaconId> beacons,
                          TimestampMs at, TimestampMs max_staleness = kDefaultMaxStaleness);

struct EvalOptions {
  TimestampMs eval_period = 10000;
  TimestampMs max_staleness = kDefaultMaxStaleness;
  /// Restart every beacon's filter at the start of each ground-truth interval.
  bool reset_per_interval = true;
};

enum class TickStatus { Ok, Stale, Geometry };

struct TickResult {
  TimestampMs timestamp = 0;
  TickStatus status = TickStatus::Ok;
  Position estimate;
  double error = 0.0;  // meters
};

struct IntervalResult {
  GroundTruthInterval interval;
  std::vector<TickResult> ticks;
  std::size_t valid_ticks = 0;
  std::size_t stale_ticks = 0;
  std::size_t geometry_ticks = 0;
  double error_sum = 0.0;
  double mean_error = 0.0;  // meters; NaN when no valid tick
};

struct MethodReport {
  Method method;
  std::vector<IntervalResult> intervals;
  std::size_t valid_ticks = 0;
  std::size_t skipped_ticks = 0;
  double average_error = 0.0;            // tick-weighted, meters
  double interval_average_error = 0.0;   // equal weight per interval, meters
};

struct ErrorReport {
  std::string scenario;
  std::vector<GroundTruthInterval> intervals;
  std::vector<MethodReport> rows;
};

/// Localizes at every eval tick inside each ground-truth interval and
/// measures the Euclidean error against the truth. Each beacon's stream is
/// filtered causally and the reading used at a tick is the nearest one at or
/// before the tick. Stale or degenerate ticks are counted and skipped.
MethodReport evaluate(std::span<const RssiSample> trace, const Scenario& scenario, const Method& method,
                      const EvalOptions& options = {});
ErrorReport evaluate(std::span<const RssiSample> trace, const Scenario& scenario,
                     std::span<const Method> methods, const EvalOptions& options = {});

/// "H:MM-H:MM" offsets from the trace origin, like the published column headers.
std::string interval_label(const GroundTruthInterval& interval);

/// Errors in centimeters with two decimals; one row per method.
std::string report_csv(const ErrorReport& report);
std::string report_markdown(const ErrorReport& report);

}  // namespace rssiloc::eval
