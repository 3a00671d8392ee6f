// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "rssiloc/error.hpp"
#include "rssiloc/eval.hpp"
#include "rssiloc/filters.hpp"
#include "rssiloc/io.hpp"
#include "rssiloc/locnet.hpp"
#include "rssiloc/parallel.hpp"
#include "rssiloc/random.hpp"
#include "rssiloc/simulator.hpp"
#include "rssiloc/trilateration.hpp"

namespace {

using namespace rssiloc;
using Clock = std::chrono::steady_clock;

// Pinned tolerances and budgets.
constexpr double kRoundTripTolM = 1e-6;
constexpr double kRoundTripBudgetS = 5;
constexpr int kOracleInstances = 100;
constexpr double kOracleGridStepM = 1e-3;
constexpr double kOracleSlack = 1e-6;
constexpr double kOracleBudgetS = 30;
constexpr int kMonteCarloSeeds = 20;
constexpr double kShadowingDb = 4.0;
constexpr double kTrendSlack = 1.05;
constexpr double kOrderingBudgetS = 120;
constexpr int kKalmanMinSamples = 60;
constexpr int kGradientConfigs = 20;
constexpr double kGradientTol = 1e-4;
constexpr double kGradientBudgetS = 10;
constexpr double kCvTolCm = 15.0;
constexpr double kCvBudgetS = 300;
constexpr int kEpochTrendSeeds = 5;

// Synthetic home dataset: ~600 samples at three spots.
constexpr simulator::NoiseModel kDatasetNoise{4.0, 2024, 4500, 500};

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, const std::function<Outcome()>& check) {
  const auto start = Clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  if (!o.pass) ++failures;
  std::printf("[%s] criterion %d: %s | %s | %.2fs\n", o.pass ? "PASS" : "FAIL", id, title.c_str(), o.detail.c_str(),
              secs);
  std::fflush(stdout);
}

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---- 1 ----

Outcome round_trip() {
  const auto start = Clock::now();
  double worst = 0.0;
  std::size_t ticks = 0, skipped = 0;
  simulator::SimulationOptions options;
  options.walls = false;
  for (const auto& s : {simulator::home_scenario(), simulator::office_scenario()}) {
    const auto trace = simulator::simulate(s, {0.0, 1}, options).trace;
    const auto r = eval::evaluate(trace, s, eval::parse_method("raw"));
    skipped += r.skipped_ticks;
    for (const auto& iv : r.intervals)
      for (const auto& t : iv.ticks) {
        worst = std::max(worst, t.status == eval::TickStatus::Ok ? t.error : INFINITY);
        ++ticks;
      }
  }
  const double secs = seconds_since(start);
  return {worst < kRoundTripTolM && skipped == 0 && secs < kRoundTripBudgetS,
          std::to_string(ticks) + " ticks, max error " + fmt("%.3g", worst) + " m (< 1e-6), runtime " +
              fmt("%.2f", secs) + " s (< 5)"};
}

// ---- 2 ----

double grid_min_residual(const std::vector<trilateration::Anchor>& anchors, double x0, double x1, double y0, double y1) {
  const long nx = std::lround((x1 - x0) / kOracleGridStepM);
  const long ny = std::lround((y1 - y0) / kOracleGridStepM);
  std::vector<double> dx2(anchors.size()), cy(anchors.size()), d2(anchors.size());
  for (std::size_t k = 0; k < anchors.size(); ++k) {
    cy[k] = anchors[k].center.y;
    d2[k] = anchors[k].distance * anchors[k].distance;
  }
  double best = INFINITY;
  for (long i = 0; i <= nx; ++i) {
    const double x = x0 + static_cast<double>(i) * kOracleGridStepM;
    for (std::size_t k = 0; k < anchors.size(); ++k) dx2[k] = (x - anchors[k].center.x) * (x - anchors[k].center.x) - d2[k];
    for (long j = 0; j <= ny; ++j) {
      const double y = y0 + static_cast<double>(j) * kOracleGridStepM;
      double r = 0.0;
      for (std::size_t k = 0; k < anchors.size(); ++k) {
        const double e = dx2[k] + (y - cy[k]) * (y - cy[k]);
        r += e * e;
      }
      best = std::min(best, r);
    }
  }
  return best;
}

Outcome trilateration_oracle() {
  const auto start = Clock::now();
  Rng rng(20240601);
  int bad = 0;
  double worst_gap = -INFINITY;
  for (int n = 0; n < kOracleInstances; ++n) {
    // Anchors inside [0,4]x[0,3]; the grid covers one meter beyond.
    std::vector<trilateration::Anchor> anchors;
    double area = 0.0;
    do {
      anchors.clear();
      for (int k = 0; k < 3; ++k) anchors.push_back({{rng.uniform() * 4, rng.uniform() * 3}, 0});
      area = std::abs((anchors[1].center.x - anchors[0].center.x) * (anchors[2].center.y - anchors[0].center.y) -
                      (anchors[2].center.x - anchors[0].center.x) * (anchors[1].center.y - anchors[0].center.y));
    } while (area < 1.0);
    const Position truth{rng.uniform() * 4, rng.uniform() * 3};
    for (auto& a : anchors) {
      // Half the instances perturb true ranges, half draw them blindly.
      a.distance = n % 2 == 0 ? std::max(0.05, euclidean(a.center, truth) * std::exp(rng.normal(0, 0.4)))
                              : 0.1 + rng.uniform() * 4;
    }
    const auto est = trilateration::trilaterate(anchors);
    const double oracle = grid_min_residual(anchors, -1, 5, -1, 4);
    const double gap = est.residual - oracle;
    worst_gap = std::max(worst_gap, gap);
    if (gap > kOracleSlack) ++bad;
  }
  const double secs = seconds_since(start);
  return {bad == 0 && secs < kOracleBudgetS,
          std::to_string(kOracleInstances - bad) + "/" + std::to_string(kOracleInstances) +
              " within grid minimum + 1e-6, worst (solver - grid) " + fmt("%.3g", worst_gap) + ", runtime " +
              fmt("%.2f", secs) + " s (< 30)"};
}

// ---- 3, 4 ----

struct MonteCarlo {
  std::vector<std::string> labels;
  std::vector<double> mean_cm;  // averaged over seeds
  double seconds = 0.0;
};

const MonteCarlo& home_monte_carlo() {
  static const MonteCarlo mc = [] {
    const auto start = Clock::now();
    const auto home = simulator::home_scenario();
    const auto methods = eval::parse_methods(
        "raw,kalman,hybrid:50,lookback:5,lookback:10,lookback:15,lookback:20,lookback:30,lookback:50");
    MonteCarlo out;
    out.mean_cm.assign(methods.size(), 0.0);
    std::vector<std::vector<double>> per_seed(kMonteCarloSeeds);
    parallel_for(kMonteCarloSeeds, default_jobs(), [&](std::size_t seed) {
      const auto trace = simulator::simulate(home, {kShadowingDb, seed}).trace;
      const auto r = eval::evaluate(trace, home, methods);
      for (const auto& row : r.rows) per_seed[seed].push_back(row.average_error * 100.0);
    });
    for (const auto& row : per_seed)
      for (std::size_t m = 0; m < row.size(); ++m) out.mean_cm[m] += row[m] / kMonteCarloSeeds;
    for (const auto& m : methods) out.labels.push_back(m.spec());
    out.seconds = seconds_since(start);
    return out;
  }();
  return mc;
}

Outcome method_ordering() {
  const auto& mc = home_monte_carlo();
  const double raw = mc.mean_cm[0], kalman = mc.mean_cm[1], hybrid = mc.mean_cm[2], lb50 = mc.mean_cm[8];
  const bool ok = hybrid <= kTrendSlack * kalman && kalman <= kTrendSlack * raw && lb50 <= kTrendSlack * raw &&
                  mc.seconds < kOrderingBudgetS;
  return {ok, "cm over 20 seeds: RAW " + fmt("%.2f", raw) + ", KALMAN " + fmt("%.2f", kalman) + ", HYBRID(50) " +
                  fmt("%.2f", hybrid) + ", LOOKBACK(50) " + fmt("%.2f", lb50) + " (5% slack), runtime " +
                  fmt("%.2f", mc.seconds) + " s (< 120)"};
}

Outcome lookback_trend() {
  const auto& mc = home_monte_carlo();
  bool ok = true;
  std::string detail = "cm over 20 seeds, k=5..50:";
  for (std::size_t i = 3; i < mc.mean_cm.size(); ++i) {
    detail += " " + fmt("%.2f", mc.mean_cm[i]);
    if (i > 3 && mc.mean_cm[i] > kTrendSlack * mc.mean_cm[i - 1]) ok = false;
  }
  return {ok, detail + " (each <= 1.05 x previous)"};
}

// ---- 5 ----

Outcome kalman_properties() {
  const auto home = simulator::home_scenario();
  int seeds_reduced = 0;
  bool bounded = true;
  std::size_t streams = 0, streams_reduced = 0;
  for (int seed = 0; seed < kMonteCarloSeeds; ++seed) {
    const auto trace = simulator::simulate(home, {kShadowingDb, static_cast<std::uint64_t>(seed)}).trace;
    double raw_se = 0, filt_se = 0;
    for (const auto& iv : home.ground_truth) {
      for (const auto& b : home.beacons) {
        std::vector<double> s;
        for (const auto& r : trace)
          if (r.beacon_id == b.beacon_id && iv.contains(r.timestamp)) s.push_back(r.rssi);
        if (static_cast<int>(s.size()) < kKalmanMinSamples) return {false, "stream shorter than 60 samples"};
        const double truth = simulator::expected_rssi(b, iv.position, home.walls);
        const auto out = filters::kalman_run(s);
        double lo = s[0], hi = s[0], raw_stream = 0, filt_stream = 0;
        for (std::size_t i = 0; i < s.size(); ++i) {
          lo = std::min(lo, s[i]);
          hi = std::max(hi, s[i]);
          bounded &= out[i] >= lo && out[i] <= hi;
          raw_stream += (s[i] - truth) * (s[i] - truth);
          filt_stream += (out[i] - truth) * (out[i] - truth);
        }
        ++streams;
        streams_reduced += filt_stream < raw_stream;
        raw_se += raw_stream;
        filt_se += filt_stream;
      }
    }
    seeds_reduced += filt_se < raw_se;
  }

  // Convergence to a constant truth from a distant start.
  bool converges = true;
  for (double start : {-40.0, -120.0}) {
    filters::KalmanState st{start, 1.0, 0.05, 4.0};
    double gap = std::abs(start + 80);
    for (int i = 0; i < 200; ++i) {
      st = filters::kalman_step(st, -80);
      const double g = std::abs(st.estimate + 80);
      converges &= g < gap;
      gap = g;
    }
    converges &= gap < 1e-6;
  }

  const bool ok = bounded && converges && seeds_reduced == kMonteCarloSeeds;
  return {ok, std::string("bounded ") + (bounded ? "yes" : "no") + ", converges " + (converges ? "yes" : "no") +
                  ", MSE reduced in " + std::to_string(seeds_reduced) + "/20 seeds (" + std::to_string(streams_reduced) +
                  "/" + std::to_string(streams) + " streams of >= 60 samples)"};
}

// ---- 6 ----

Outcome gradient_check() {
  const auto start = Clock::now();
  Rng rng(77);
  int checked = 0, kinks = 0;
  double worst = 0.0;
  while (checked < kGradientConfigs) {
    locnet::MlpConfig c;
    c.hidden_layers = static_cast<int>(rng.uniform_int(1, 5));
    c.neurons_per_layer = static_cast<int>(rng.uniform_int(4, 32));
    auto m = locnet::Mlp::initialize(c, rng.next());
    for (auto& layer : m.layers())
      for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = rng.normal(0, 0.2);
    m.input_mean() << -75, -75, -75;
    m.input_std() << 8, 8, 8;
    const locnet::RssiTriple x = {rng.normal(-75, 8), rng.normal(-75, 8), rng.normal(-75, 8)};
    const Position t{rng.uniform() * 5, rng.uniform() * 5};
    try {
      worst = std::max(worst, locnet::gradient_check(m, x, t).max_relative_error);
      ++checked;
    } catch (const locnet::KinkError&) {
      ++kinks;
    }
  }
  const double secs = seconds_since(start);
  return {worst < kGradientTol && secs < kGradientBudgetS,
          "max relative error " + fmt("%.3g", worst) + " (< 1e-4) over 20 configurations (" + std::to_string(kinks) +
              " kink draws resampled), runtime " + fmt("%.2f", secs) + " s (< 10)"};
}

// ---- 7, 8 ----

locnet::Dataset home_dataset(std::uint64_t seed) {
  const auto home = simulator::home_scenario();
  auto noise = kDatasetNoise;
  noise.seed = seed;
  return locnet::make_dataset(simulator::simulate(home, noise).trace, home);
}

Outcome mlp_cv() {
  const auto start = Clock::now();
  const auto d = home_dataset(kDatasetNoise.seed);
  locnet::MlpConfig c;
  c.hidden_layers = 3;
  c.neurons_per_layer = 32;
  c.epochs = 1000;
  c.seed = 1;
  const auto r = locnet::stratified_kfold_eval(d, c, 10, default_jobs());
  const double secs = seconds_since(start);
  return {r.mean_error_cm <= kCvTolCm && secs < kCvBudgetS,
          std::to_string(d.size()) + " samples, 10-fold 3x32 @1000 epochs: " + fmt("%.2f", r.mean_error_cm) + " +- " +
              fmt("%.2f", r.std_error_cm) + " cm (<= 15), runtime " + fmt("%.2f", secs) + " s (< 300)"};
}

Outcome epoch_trend() {
  double e100 = 0, e1000 = 0;
  for (int s = 1; s <= kEpochTrendSeeds; ++s) {
    const auto d = home_dataset(static_cast<std::uint64_t>(s));
    locnet::MlpConfig c;
    c.hidden_layers = 1;
    c.seed = static_cast<std::uint64_t>(s);
    c.epochs = 100;
    e100 += locnet::stratified_kfold_eval(d, c, 10, default_jobs()).mean_error_cm / kEpochTrendSeeds;
    c.epochs = 1000;
    e1000 += locnet::stratified_kfold_eval(d, c, 10, default_jobs()).mean_error_cm / kEpochTrendSeeds;
  }
  return {e1000 < e100, "1 hidden layer, mean over 5 seeds: 100 epochs " + fmt("%.2f", e100) + " cm, 1000 epochs " +
                            fmt("%.2f", e1000) + " cm"};
}

// ---- 9 ----

std::string trace_csv(const std::vector<RssiSample>& t) {
  std::ostringstream out;
  io::write_trace(out, t);
  return out.str();
}

Outcome determinism_and_goldens() {
  const std::string fixtures = RSSILOC_FIXTURES;
  const auto home = simulator::home_scenario();
  std::vector<std::string> failed;

  const auto a = simulator::simulate(home, {4.0, 7}).trace;
  const auto b = simulator::simulate(home, {4.0, 7}).trace;
  if (trace_csv(a) != trace_csv(b)) failed.push_back("trace rerun");

  const auto d = home_dataset(3);
  locnet::MlpConfig c;
  c.hidden_layers = 2;
  c.neurons_per_layer = 16;
  c.epochs = 40;
  c.seed = 11;
  if (locnet::model_to_json(locnet::train(d, c).model) != locnet::model_to_json(locnet::train(d, c).model))
    failed.push_back("model rerun");

  const auto methods = eval::parse_methods("raw,lookback:5,lookback:50,kalman,hybrid:50");
  const auto r1 = eval::report_csv(eval::evaluate(a, home, methods));
  const auto r2 = eval::report_csv(eval::evaluate(b, home, methods));
  if (r1 != r2) failed.push_back("report rerun");

  if (trace_csv(a) != io::read_file(fixtures + "/home_sigma4_seed7_trace.csv")) failed.push_back("golden trace");
  std::ostringstream truth;
  io::write_truth(truth, home.ground_truth);
  if (truth.str() != io::read_file(fixtures + "/home_truth.csv")) failed.push_back("golden truth");
  const auto committed = io::load_trace(fixtures + "/home_sigma4_seed7_trace.csv");
  const auto report = eval::evaluate(committed, home, methods);
  if (eval::report_csv(report) != io::read_file(fixtures + "/home_report.csv")) failed.push_back("golden report csv");
  if (eval::report_markdown(report) != io::read_file(fixtures + "/home_report.md")) failed.push_back("golden report md");

  std::string detail = "trace, model and report reruns byte-identical; golden trace/truth/report regenerate exactly";
  if (!failed.empty()) {
    detail = "mismatch:";
    for (const auto& f : failed) detail += " " + f;
  }
  return {failed.empty(), detail};
}

// ---- 10 ----

struct LookbackVector {
  std::vector<double> window;
  filters::OutlierMode mode;
  double expected;
};

Outcome lookback_vectors() {
  using filters::OutlierMode;
  // Hand-executed: outliers, mean/sd, one-sigma trim, mean of the rest.
  const std::vector<LookbackVector> vectors = {
      {{-70, -70, -70, -70, -70}, OutlierMode::MinMax, -70},
      {{-60, -70, -70, -70, -95}, OutlierMode::MinMax, -70},
      {{-65, -70, -72, -74, -90}, OutlierMode::MinMax, -72},
      {{-60, -62, -64, -66, -68, -70}, OutlierMode::MinMax, -65},
      {{-70, -80, -70, -80}, OutlierMode::MinMax, -75},
      {{-90, -50, -71}, OutlierMode::MinMax, -71},
      {{-73}, OutlierMode::MinMax, -73},
      {{-60, -80}, OutlierMode::MinMax, -70},
      {{-70.1, -70.3}, OutlierMode::MinMax, (-70.3 + -70.1) / 2},
      {{-70, -70, -70, -70, -120}, OutlierMode::Iqr, -70},
      {{-60, -62, -64, -66, -100}, OutlierMode::Iqr, -63},
      {{-66, -80, -68, -70}, OutlierMode::Iqr, -68},
      {{-68, -69, -70, -71, -72}, OutlierMode::Iqr, -70},
      {{-75}, OutlierMode::Iqr, -75},
      {{-60, -80}, OutlierMode::Iqr, -70},
  };
  int passed = 0;
  std::string misses;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    const auto& v = vectors[i];
    const double got = filters::lookback_reduce(v.window, {static_cast<int>(v.window.size()), v.mode});
    if (got == v.expected) {
      ++passed;
    } else {
      misses += " #" + std::to_string(i) + "=" + io::format_double(got);
    }
  }
  return {passed == static_cast<int>(vectors.size()),
          std::to_string(passed) + "/" + std::to_string(vectors.size()) + " exact" + misses};
}

}  // namespace

int main() {
  report(1, "noiseless round-trip", round_trip);
  report(2, "trilateration grid oracle", trilateration_oracle);
  report(3, "method ordering", method_ordering);
  report(4, "look-back-k trend", lookback_trend);
  report(5, "Kalman filter properties", kalman_properties);
  report(6, "MLP gradient check", gradient_check);
  report(7, "MLP desk-scale localization", mlp_cv);
  report(8, "epoch trend", epoch_trend);
  report(9, "determinism and goldens", determinism_and_goldens);
  report(10, "look-back unit vectors", lookback_vectors);
  std::printf("%s: %d criterion(s) failed\n", failures == 0 ? "OK" : "FAILED", failures);
  return failures == 0 ? 0 : 1;
}
