#include "rssiloc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <string>

#include "rssiloc/error.hpp"
#include "rssiloc/io.hpp"
#include "rssiloc/pathloss.hpp"
#include "rssiloc/trilateration.hpp"

namespace rssiloc::eval {

std::string Method::label() const {
  const std::string iqr = lookback.outlier_mode == filters::OutlierMode::Iqr ? " (IQR)" : "";
  switch (kind) {
    case MethodKind::Raw:
      return "Raw values";
    case MethodKind::Lookback:
      return "Look-back-" + std::to_string(lookback.k) + iqr;
    case MethodKind::Kalman:
      return "Kalman filter";
    case MethodKind::Hybrid:
      return "Kalman filter + look-back-" + std::to_string(lookback.k) + iqr;
  }
  return {};
}

std::string Method::spec() const {
  const std::string tail = ":" + std::to_string(lookback.k) + ":" + std::string(filters::to_string(lookback.outlier_mode));
  switch (kind) {
    case MethodKind::Raw:
      return "raw";
    case MethodKind::Lookback:
      return "lookback" + tail;
    case MethodKind::Kalman:
      return "kalman";
    case MethodKind::Hybrid:
      return "hybrid" + tail;
  }
  return {};
}

std::vector<double> Method::transform(std::span<const double> samples) const {
  switch (kind) {
    case MethodKind::Raw:
      return {samples.begin(), samples.end()};
    case MethodKind::Lookback:
      return filters::lookback_stream(samples, lookback);
    case MethodKind::Kalman:
      return filters::kalman_run(samples, kalman);
    case MethodKind::Hybrid:
      return filters::hybrid_stream(samples, kalman, lookback);
  }
  return {};
}

Method parse_method(std::string_view spec, const MethodDefaults& defaults) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    auto colon = spec.find(':', start);
    parts.emplace_back(spec.substr(start, colon - start));
    if (colon == std::string_view::npos) break;
    start = colon + 1;
  }

  Method m;
  m.kalman = defaults.kalman;
  m.lookback = {defaults.k, defaults.outlier_mode};
  const std::string& name = parts[0];
  const bool windowed = name == "lookback" || name == "hybrid";
  if (name == "raw") {
    m.kind = MethodKind::Raw;
  } else if (name == "kalman") {
    m.kind = MethodKind::Kalman;
  } else if (name == "lookback") {
    m.kind = MethodKind::Lookback;
  } else if (name == "hybrid") {
    m.kind = MethodKind::Hybrid;
  } else {
    throw InputError("unknown method '" + std::string(spec) + "'");
  }
  if (!windowed && parts.size() > 1) throw InputError("method '" + name + "' takes no parameters");
  if (parts.size() > 3) throw InputError("too many parameters in method '" + std::string(spec) + "'");
  if (parts.size() >= 2) {
    try {
      m.lookback.k = static_cast<int>(io::parse_int(parts[1]));
    } catch (const InputError&) {
      throw InputError("method '" + std::string(spec) + "': k must be an integer");
    }
  }
  if (parts.size() == 3) m.lookback.outlier_mode = filters::parse_outlier_mode(parts[2]);
  if (windowed && m.lookback.k < 1) throw InputError("method '" + std::string(spec) + "': k must be >= 1");
  return m;
}

std::vector<Method> parse_methods(std::string_view list, const MethodDefaults& defaults) {
  std::vector<Method> methods;
  for (const auto& item : io::split_csv_line(list)) {
    if (item.empty()) throw InputError("empty method in list '" + std::string(list) + "'");
    methods.push_back(parse_method(item, defaults));
  }
  return methods;
}

std::vector<double> align(std::span<const RssiSample> trace, std::span<const BeaconId> beacons, TimestampMs at,
                          TimestampMs max_staleness) {
  std::vector<double> out;
  out.reserve(beacons.size());
  for (const auto& id : beacons) {
    const RssiSample* best = nullptr;
    TimestampMs best_gap = std::numeric_limits<TimestampMs>::max();
    for (const auto& s : trace) {
      if (s.beacon_id != id) continue;
      const TimestampMs gap = std::abs(s.timestamp - at);
      // Strict comparison over a time-sorted trace keeps the earlier sample on ties.
      if (gap < best_gap) {
        best_gap = gap;
        best = &s;
      }
    }
    if (best == nullptr || best_gap > max_staleness) {
      throw StalenessError(id, "no sample from beacon '" + id + "' within " + std::to_string(max_staleness) +
                                   " ms of t=" + std::to_string(at));
    }
    out.push_back(best->rssi);
  }
  return out;
}

namespace {

/// Per-beacon readings replaced by the method's filtered values.
std::vector<RssiSample> filtered_trace(std::span<const RssiSample> trace, std::span<const BeaconId> beacons,
                                       const Method& method) {
  std::map<BeaconId, std::vector<std::size_t>> rows;
  for (const auto& id : beacons) rows[id];
  for (std::size_t i = 0; i < trace.size(); ++i) {
    auto it = rows.find(trace[i].beacon_id);
    if (it != rows.end()) it->second.push_back(i);
  }
  std::vector<RssiSample> out(trace.begin(), trace.end());
  std::vector<bool> keep(trace.size(), false);
  for (const auto& [id, idx] : rows) {
    if (idx.empty()) continue;
    std::vector<double> values;
    values.reserve(idx.size());
    for (auto i : idx) values.push_back(trace[i].rssi);
    const auto smoothed = method.transform(values);
    for (std::size_t j = 0; j < idx.size(); ++j) {
      out[idx[j]].rssi = smoothed[j];
      keep[idx[j]] = true;
    }
  }
  std::vector<RssiSample> kept;
  kept.reserve(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (keep[i]) kept.push_back(std::move(out[i]));
  }
  return kept;
}

}  // namespace

MethodReport evaluate(std::span<const RssiSample> trace, const Scenario& scenario, const Method& method,
                      const EvalOptions& options) {
  validate(scenario);
  if (options.eval_period <= 0) throw InputError("eval period must be > 0");
  for (std::size_t i = 1; i < trace.size(); ++i) {
    if (trace[i].timestamp < trace[i - 1].timestamp) throw InputError("trace is not sorted by timestamp");
  }

  const auto ids = scenario.beacon_ids();
  std::vector<trilateration::Anchor> anchors(ids.size());
  std::vector<pathloss::PathLossModel> models;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    anchors[i].center = scenario.beacons[i].position;
    models.push_back(pathloss::model_of(scenario.beacons[i]));
  }

  auto by_time = [](const RssiSample& s, TimestampMs t) { return s.timestamp < t; };
  auto time_le = [](TimestampMs t, const RssiSample& s) { return t < s.timestamp; };

  std::vector<RssiSample> whole;
  if (!options.reset_per_interval) whole = filtered_trace(trace, ids, method);

  MethodReport report;
  report.method = method;
  double total = 0.0;
  double interval_sum = 0.0;
  std::size_t intervals_with_data = 0;

  for (const auto& interval : scenario.ground_truth) {
    std::vector<RssiSample> local;
    std::span<const RssiSample> view;
    if (options.reset_per_interval) {
      auto first = std::lower_bound(trace.begin(), trace.end(), interval.start, by_time);
      auto last = std::upper_bound(trace.begin(), trace.end(), interval.end, time_le);
      local = filtered_trace(std::span(first, last), ids, method);
      view = local;
    } else {
      view = whole;
    }

    IntervalResult ir;
    ir.interval = interval;
    for (TimestampMs t = interval.start + options.eval_period; t <= interval.end; t += options.eval_period) {
      TickResult tick;
      tick.timestamp = t;
      // Causal: only readings at or before the tick are visible.
      auto end = std::upper_bound(view.begin(), view.end(), t, time_le);
      std::vector<double> rssi;
      try {
        rssi = align(std::span(view.begin(), end), ids, t, options.max_staleness);
      } catch (const StalenessError&) {
        tick.status = TickStatus::Stale;
        ++ir.stale_ticks;
        ir.ticks.push_back(tick);
        continue;
      }
      for (std::size_t i = 0; i < ids.size(); ++i) anchors[i].distance = pathloss::rssi_to_distance(models[i], rssi[i]);
      try {
        tick.estimate = trilateration::trilaterate(anchors).position;
      } catch (const GeometryError&) {
        tick.status = TickStatus::Geometry;
        ++ir.geometry_ticks;
        ir.ticks.push_back(tick);
        continue;
      }
      tick.error = euclidean(tick.estimate, interval.position);
      ir.error_sum += tick.error;
      ++ir.valid_ticks;
      ir.ticks.push_back(tick);
    }
    ir.mean_error = ir.valid_ticks > 0 ? ir.error_sum / static_cast<double>(ir.valid_ticks)
                                       : std::numeric_limits<double>::quiet_NaN();
    total += ir.error_sum;
    report.valid_ticks += ir.valid_ticks;
    report.skipped_ticks += ir.stale_ticks + ir.geometry_ticks;
    if (ir.valid_ticks > 0) {
      interval_sum += ir.mean_error;
      ++intervals_with_data;
    }
    report.intervals.push_back(std::move(ir));
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  report.average_error = report.valid_ticks > 0 ? total / static_cast<double>(report.valid_ticks) : nan;
  report.interval_average_error = intervals_with_data > 0 ? interval_sum / static_cast<double>(intervals_with_data) : nan;
  return report;
}

ErrorReport evaluate(std::span<const RssiSample> trace, const Scenario& scenario, std::span<const Method> methods,
                     const EvalOptions& options) {
  ErrorReport report;
  report.scenario = scenario.name;
  report.intervals = scenario.ground_truth;
  for (const auto& m : methods) report.rows.push_back(evaluate(trace, scenario, m, options));
  return report;
}

}  // namespace rssiloc::eval
