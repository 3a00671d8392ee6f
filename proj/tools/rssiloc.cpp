// rssiloc: simulate traces, calibrate, evaluate filters, train and sweep the MLP.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rssiloc/error.hpp"
#include "rssiloc/eval.hpp"
#include "rssiloc/io.hpp"
#include "rssiloc/locnet.hpp"
#include "rssiloc/parallel.hpp"
#include "rssiloc/pathloss.hpp"
#include "rssiloc/simulator.hpp"

namespace {

using namespace rssiloc;

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

// Bad flag values discovered after CLI11 has finished parsing.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Reads a flat JSON object whose keys are long flag names. Items are routed
// to the subcommand selected on the command line, so a single file can hold
// settings for several subcommands only if they share flag names.
class JsonConfig : public CLI::Config {
 public:
  explicit JsonConfig(const CLI::App* app) : app_(app) {}

  std::string to_config(const CLI::App* app, bool, bool, std::string) const override {
    nlohmann::json doc = nlohmann::json::object();
    for (const CLI::Option* opt : app->get_options()) {
      if (opt->get_lnames().empty() || opt->get_lnames().front() == "config") continue;
      if (opt->count() == 0) continue;
      const auto values = opt->results();
      doc[opt->get_lnames().front()] = values.size() == 1 ? nlohmann::json(values.front()) : nlohmann::json(values);
    }
    return doc.dump(2) + "\n";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    nlohmann::json doc;
    try {
      in >> doc;
    } catch (const nlohmann::json::exception& e) {
      throw CLI::ConfigError(std::string("config file is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw CLI::ConfigError("config file must hold a JSON object");

    std::vector<std::string> parents;
    if (const auto subs = app_->get_subcommands(); !subs.empty()) parents.push_back(subs.front()->get_name());

    std::vector<CLI::ConfigItem> items;
    for (const auto& [key, value] : doc.items()) {
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(key, v));
      } else {
        item.inputs.push_back(scalar(key, value));
      }
      items.push_back(std::move(item));
    }
    return items;
  }

 private:
  static std::string scalar(const std::string& key, const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number()) return v.dump();
    throw CLI::ConfigError("config key '" + key + "' must be a string, number, boolean or array of those");
  }

  const CLI::App* app_;
};

struct ScenarioSource {
  std::string builtin;
  std::string path;

  void add_to(CLI::App* cmd) {
    auto* b = cmd->add_option("--builtin", builtin, "Builtin scenario")->check(CLI::IsMember({"home", "office"}));
    auto* s = cmd->add_option("--scenario", path, "Scenario JSON file");
    b->excludes(s);
  }

  Scenario load() const {
    if (!builtin.empty()) return simulator::builtin_scenario(builtin);
    if (!path.empty()) return io::load_scenario(path);
    throw UsageError("one of --builtin or --scenario is required");
  }
};

std::vector<int> parse_int_list(const std::string& text, const std::string& flag) {
  std::vector<int> values;
  for (const auto& field : io::split_csv_line(text)) {
    try {
      const auto v = io::parse_int(field);
      if (v < 1 || v > 1000000) throw InputError("out of range");
      values.push_back(static_cast<int>(v));
    } catch (const InputError&) {
      throw UsageError(flag + ": expected a comma-separated list of positive integers, got '" + text + "'");
    }
  }
  if (values.empty()) throw UsageError(flag + ": empty list");
  return values;
}

void write_predictions(const std::string& path, const std::vector<Position>& predictions) {
  std::ostringstream out;
  out << "x_m,y_m\n";
  for (const auto& p : predictions) out << io::format_double(p.x) << ',' << io::format_double(p.y) << '\n';
  io::write_file(path, out.str());
}

// ---- simulate ----

struct SimulateArgs {
  ScenarioSource scenario;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  TimestampMs period = 8000;
  TimestampMs jitter = 1000;
  bool no_walls = false;
  std::string out;
  std::string truth_out;
  std::string scenario_out;
};

int run_simulate(const SimulateArgs& a) {
  const Scenario scenario = a.scenario.load();
  simulator::SimulationOptions options;
  options.walls = !a.no_walls;
  const auto result = simulator::simulate(scenario, {a.sigma, a.seed, a.period, a.jitter}, options);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
  io::save_trace(a.out, result.trace);
  if (!a.truth_out.empty()) io::save_truth(a.truth_out, scenario.ground_truth);
  if (!a.scenario_out.empty()) io::save_scenario(a.scenario_out, scenario);
  std::cout << result.trace.size() << " samples written to " << a.out << '\n';
  return kExitOk;
}

// ---- calibrate ----

struct CalibrateArgs {
  ScenarioSource scenario;
  std::string calibration;
  std::string trace;
  std::string truth;
  TimestampMs period = 10000;
  TimestampMs staleness = eval::kDefaultMaxStaleness;
  std::string a_grid = "-95:-55:1";
  std::string n_grid = "1.4:5.1:0.1";
  std::string out;
};

std::vector<double> parse_range(const std::string& text, const std::string& flag) {
  std::vector<double> parts;
  std::size_t begin = 0;
  while (true) {
    const auto colon = text.find(':', begin);
    const auto field = std::string_view(text).substr(begin, colon == std::string::npos ? std::string::npos : colon - begin);
    try {
      parts.push_back(io::parse_double(field));
    } catch (const InputError&) {
      throw UsageError(flag + ": expected first:last:step, got '" + text + "'");
    }
    if (colon == std::string::npos) break;
    begin = colon + 1;
  }
  if (parts.size() == 1) return parts;
  if (parts.size() != 3 || !(parts[2] > 0.0) || parts[1] < parts[0])
    throw UsageError(flag + ": expected first:last:step with step > 0 and last >= first, got '" + text + "'");
  return pathloss::CalibrationGrid::range(parts[0], parts[1], parts[2]);
}

std::vector<pathloss::CalibrationPoint> points_from_trace(const std::vector<RssiSample>& trace,
                                                          const std::vector<GroundTruthInterval>& truth,
                                                          const std::vector<BeaconId>& ids, TimestampMs period,
                                                          TimestampMs staleness) {
  std::vector<pathloss::CalibrationPoint> points;
  for (const auto& iv : truth) {
    for (TimestampMs t = iv.start; t <= iv.end; t += period) {
      try {
        const auto values = eval::align(trace, ids, t, staleness);
        pathloss::CalibrationPoint p;
        p.timestamp = t;
        p.truth = iv.position;
        for (std::size_t i = 0; i < ids.size(); ++i) p.rssi[ids[i]] = values[i];
        points.push_back(std::move(p));
      } catch (const StalenessError&) {
      }
    }
  }
  return points;
}

int run_calibrate(const CalibrateArgs& a) {
  Scenario scenario = a.scenario.load();
  pathloss::CalibrationGrid grid{parse_range(a.a_grid, "--a-grid"), parse_range(a.n_grid, "--n-grid")};
  std::vector<pathloss::CalibrationPoint> points;
  if (!a.calibration.empty()) {
    points = pathloss::load_calibration(a.calibration);
  } else if (!a.trace.empty()) {
    const auto truth = a.truth.empty() ? scenario.ground_truth : io::load_truth(a.truth);
    points = points_from_trace(io::load_trace(a.trace), truth, scenario.beacon_ids(), a.period, a.staleness);
  } else {
    throw UsageError("one of --calibration or --trace is required");
  }
  const auto result = pathloss::calibrate(points, scenario.beacons, grid);
  std::cout << "points " << points.size() << "\nA " << io::format_double(result.model.a_ref) << " dBm\nn "
            << io::format_double(result.model.path_loss_exp) << "\nmean error " << io::format_fixed(result.mean_error * 100.0, 2)
            << " cm\n";
  if (!a.out.empty()) {
    for (auto& b : scenario.beacons) {
      b.a_ref = result.model.a_ref;
      b.path_loss_exp = result.model.path_loss_exp;
    }
    io::save_scenario(a.out, scenario);
  }
  return kExitOk;
}

// ---- evaluate ----

struct FilterArgs {
  int k = 5;
  std::string outlier = "minmax";
  double q = filters::KalmanParams{}.q;
  double r = filters::KalmanParams{}.r;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--k", k, "Default look-back window")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--outlier", outlier, "Default outlier mode")
        ->check(CLI::IsMember({"minmax", "iqr"}))
        ->capture_default_str();
    cmd->add_option("--q", q, "Kalman process noise (dBm^2)")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--r", r, "Kalman measurement noise (dBm^2)")->check(CLI::PositiveNumber)->capture_default_str();
  }

  eval::MethodDefaults defaults() const {
    eval::MethodDefaults d;
    d.k = k;
    d.outlier_mode = filters::parse_outlier_mode(outlier);
    d.kalman = {q, r};
    return d;
  }
};

struct EvaluateArgs {
  ScenarioSource scenario;
  FilterArgs filter;
  std::string trace;
  std::string truth;
  std::string methods = "raw,lookback,kalman,hybrid";
  TimestampMs period = 10000;
  TimestampMs staleness = eval::kDefaultMaxStaleness;
  bool no_reset = false;
  std::string out;
  std::string markdown;
};

int run_evaluate(const EvaluateArgs& a) {
  std::vector<eval::Method> methods;
  try {
    methods = eval::parse_methods(a.methods, a.filter.defaults());
  } catch (const InputError& e) {
    throw UsageError(std::string("--method: ") + e.what());
  }
  Scenario scenario = a.scenario.load();
  if (!a.truth.empty()) scenario.ground_truth = io::load_truth(a.truth);
  const auto trace = io::load_trace(a.trace);
  eval::EvalOptions options;
  options.eval_period = a.period;
  options.max_staleness = a.staleness;
  options.reset_per_interval = !a.no_reset;
  const auto report = eval::evaluate(trace, scenario, methods, options);
  io::write_file(a.out, eval::report_csv(report));
  const std::string md = eval::report_markdown(report);
  if (!a.markdown.empty()) io::write_file(a.markdown, md);
  std::cout << md;
  for (const auto& row : report.rows) {
    if (row.skipped_ticks > 0)
      std::cerr << "note: " << row.method.label() << ": " << row.skipped_ticks << " tick(s) skipped\n";
  }
  return kExitOk;
}

// ---- dataset ----

struct DatasetArgs {
  ScenarioSource scenario;
  std::string trace;
  std::string truth;
  double sigma = 4.0;
  std::uint64_t seed = 0;
  TimestampMs period = 4500;
  TimestampMs jitter = 500;
  TimestampMs staleness = eval::kDefaultMaxStaleness;
  std::string out;
};

int run_dataset(const DatasetArgs& a) {
  Scenario scenario = a.scenario.load();
  if (!a.truth.empty()) scenario.ground_truth = io::load_truth(a.truth);
  std::vector<RssiSample> trace;
  if (!a.trace.empty()) {
    trace = io::load_trace(a.trace);
  } else {
    trace = simulator::simulate(scenario, {a.sigma, a.seed, a.period, a.jitter}).trace;
  }
  const auto dataset = locnet::make_dataset(trace, scenario, a.staleness);
  locnet::save_dataset(a.out, dataset);
  std::cout << dataset.size() << " samples written to " << a.out << '\n';
  return kExitOk;
}

// ---- train / predict / sweep ----

struct MlpArgs {
  int layers = 3;
  int neurons = 32;
  int epochs = 1000;
  double lr = 1e-3;
  int batch = 32;
  std::uint64_t seed = 0;

  void add_to(CLI::App* cmd, bool shape) {
    if (shape) {
      cmd->add_option("--layers", layers, "Hidden layers (1-5)")->check(CLI::Range(1, 5))->capture_default_str();
      cmd->add_option("--epochs", epochs, "Training epochs")->check(CLI::PositiveNumber)->capture_default_str();
    }
    cmd->add_option("--neurons", neurons, "Neurons per hidden layer")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--lr", lr, "Adam learning rate")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--batch", batch, "Mini-batch size")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--seed", seed, "Random seed")->capture_default_str();
  }

  locnet::MlpConfig config() const {
    locnet::MlpConfig c;
    c.hidden_layers = layers;
    c.neurons_per_layer = neurons;
    c.epochs = epochs;
    c.learning_rate = lr;
    c.batch_size = batch;
    c.seed = seed;
    return c;
  }
};

struct TrainArgs {
  MlpArgs mlp;
  std::string dataset;
  std::string out;
  std::string predictions_out;
  std::string loss_out;
};

int run_train(const TrainArgs& a) {
  const auto dataset = locnet::load_dataset(a.dataset);
  const auto result = locnet::train(dataset, a.mlp.config());
  locnet::save_model(a.out, result.model);
  if (!a.predictions_out.empty()) write_predictions(a.predictions_out, locnet::predict(result.model, dataset.inputs));
  if (!a.loss_out.empty()) {
    std::ostringstream loss;
    loss << "epoch,loss\n";
    for (std::size_t e = 0; e < result.epoch_loss.size(); ++e)
      loss << e + 1 << ',' << io::format_double(result.epoch_loss[e]) << '\n';
    io::write_file(a.loss_out, loss.str());
  }
  std::cout << "trained " << a.mlp.layers << "x" << a.mlp.neurons << " for " << a.mlp.epochs
            << " epochs, final loss " << io::format_double(result.epoch_loss.back()) << '\n';
  return kExitOk;
}

struct PredictArgs {
  std::string model;
  std::string dataset;
  std::string out;
};

int run_predict(const PredictArgs& a) {
  const auto model = locnet::load_model(a.model);
  const auto dataset = locnet::load_dataset(a.dataset);
  const auto predictions = locnet::predict(model, dataset.inputs);
  write_predictions(a.out, predictions);
  double sum = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) sum += euclidean(predictions[i], dataset.targets[i]);
  std::cout << predictions.size() << " predictions, mean error "
            << io::format_fixed(sum / static_cast<double>(predictions.size()) * 100.0, 2) << " cm\n";
  return kExitOk;
}

struct SweepArgs {
  MlpArgs mlp;
  std::string dataset;
  std::string epochs_grid = "100,500,1000,2000,3000";
  std::string layers_grid = "1,2,3,4,5";
  int folds = 10;
  unsigned jobs = 1;
  std::string out;
  std::string markdown;
};

int run_sweep(const SweepArgs& a) {
  const auto epochs = parse_int_list(a.epochs_grid, "--epochs-grid");
  const auto layers = parse_int_list(a.layers_grid, "--layers-grid");
  for (int l : layers)
    if (l > 5) throw UsageError("--layers-grid: hidden layer counts must be in 1..5");
  const auto dataset = locnet::load_dataset(a.dataset);

  const std::size_t cells = epochs.size() * layers.size();
  std::vector<locnet::CvResult> results(cells);
  parallel_for(cells, a.jobs, [&](std::size_t i) {
    auto config = a.mlp.config();
    config.epochs = epochs[i / layers.size()];
    config.hidden_layers = layers[i % layers.size()];
    results[i] = locnet::stratified_kfold_eval(dataset, config, a.folds, 1);
  });

  std::ostringstream csv;
  csv << "epochs";
  for (int l : layers) csv << ",layers_" << l << "_mean_cm,layers_" << l << "_std_cm";
  csv << '\n';
  std::ostringstream md;
  md << "Mean error +- std (cm), " << a.folds << "-fold stratified CV\n\n| Epochs |";
  for (int l : layers) md << ' ' << l << " |";
  md << "\n|---:|";
  for (std::size_t j = 0; j < layers.size(); ++j) md << "---:|";
  md << '\n';
  for (std::size_t e = 0; e < epochs.size(); ++e) {
    csv << epochs[e];
    md << "| " << epochs[e] << " |";
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const auto& r = results[e * layers.size() + l];
      csv << ',' << io::format_fixed(r.mean_error_cm, 2) << ',' << io::format_fixed(r.std_error_cm, 2);
      md << ' ' << io::format_fixed(r.mean_error_cm, 2) << " +- " << io::format_fixed(r.std_error_cm, 2) << " |";
    }
    csv << '\n';
    md << '\n';
  }
  io::write_file(a.out, csv.str());
  if (!a.markdown.empty()) io::write_file(a.markdown, md.str());
  std::cout << md.str();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Indoor localization from beacon signal strength"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "JSON file with flag values (flags on the command line win)");
  app.config_formatter(std::make_shared<JsonConfig>(&app));

  app.allow_config_extras(CLI::config_extras_mode::error);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic trace from a scenario");
  sim.scenario.add_to(simulate);
  simulate->add_option("--sigma", sim.sigma, "Shadowing deviation (dB)")->check(CLI::NonNegativeNumber)->capture_default_str();
  simulate->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
  simulate->add_option("--period", sim.period, "Sample period (ms)")->check(CLI::PositiveNumber)->capture_default_str();
  simulate->add_option("--jitter", sim.jitter, "Sample jitter (ms)")->check(CLI::NonNegativeNumber)->capture_default_str();
  simulate->add_flag("--no-walls", sim.no_walls, "Ignore wall attenuation");
  simulate->add_option("--out", sim.out, "Trace CSV output")->required();
  simulate->add_option("--truth-out", sim.truth_out, "Ground-truth CSV output");
  simulate->add_option("--scenario-out", sim.scenario_out, "Scenario JSON output");

  CalibrateArgs cal;
  auto* calibrate = app.add_subcommand("calibrate", "Fit A and n by grid search on labeled readings");
  cal.scenario.add_to(calibrate);
  auto* cal_csv = calibrate->add_option("--calibration", cal.calibration, "Calibration CSV");
  calibrate->add_option("--trace", cal.trace, "Trace CSV (labeled by the scenario or --truth)")->excludes(cal_csv);
  calibrate->add_option("--truth", cal.truth, "Ground-truth CSV");
  calibrate->add_option("--period", cal.period, "Tick period when sampling a trace (ms)")->check(CLI::PositiveNumber);
  calibrate->add_option("--staleness", cal.staleness, "Maximum reading age (ms)")->check(CLI::PositiveNumber);
  calibrate->add_option("--a-grid", cal.a_grid, "A values, first:last:step or a single value")->capture_default_str();
  calibrate->add_option("--n-grid", cal.n_grid, "n values, first:last:step or a single value")->capture_default_str();
  calibrate->add_option("--out", cal.out, "Write the scenario with the fitted model");

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "Error report of localization methods on a trace");
  ev.scenario.add_to(evaluate);
  ev.filter.add_to(evaluate);
  evaluate->add_option("--trace", ev.trace, "Trace CSV")->required();
  evaluate->add_option("--truth", ev.truth, "Ground-truth CSV (defaults to the scenario's)");
  evaluate->add_option("--method", ev.methods, "Comma-separated method specs")->capture_default_str();
  evaluate->add_option("--period", ev.period, "Evaluation tick period (ms)")->check(CLI::PositiveNumber)->capture_default_str();
  evaluate->add_option("--staleness", ev.staleness, "Maximum reading age (ms)")->check(CLI::PositiveNumber)->capture_default_str();
  evaluate->add_flag("--no-reset", ev.no_reset, "Carry filter state across ground-truth intervals");
  evaluate->add_option("--out", ev.out, "Report CSV output")->required();
  evaluate->add_option("--markdown", ev.markdown, "Report markdown output");

  DatasetArgs ds;
  auto* dataset = app.add_subcommand("dataset", "Build an MLP dataset from a trace or a fresh simulation");
  ds.scenario.add_to(dataset);
  dataset->add_option("--trace", ds.trace, "Trace CSV; simulated when omitted");
  dataset->add_option("--truth", ds.truth, "Ground-truth CSV (defaults to the scenario's)");
  dataset->add_option("--sigma", ds.sigma, "Shadowing deviation when simulating (dB)")->check(CLI::NonNegativeNumber)->capture_default_str();
  dataset->add_option("--seed", ds.seed, "Random seed when simulating")->capture_default_str();
  dataset->add_option("--period", ds.period, "Sample period when simulating (ms)")->check(CLI::PositiveNumber)->capture_default_str();
  dataset->add_option("--jitter", ds.jitter, "Sample jitter when simulating (ms)")->check(CLI::NonNegativeNumber)->capture_default_str();
  dataset->add_option("--staleness", ds.staleness, "Maximum partner reading age (ms)")->check(CLI::PositiveNumber);
  dataset->add_option("--out", ds.out, "Dataset CSV output")->required();

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "Train the MLP regressor");
  tr.mlp.add_to(train, true);
  train->add_option("--dataset", tr.dataset, "Dataset CSV")->required();
  train->add_option("--out", tr.out, "Model JSON output")->required();
  train->add_option("--predictions-out", tr.predictions_out, "Predictions on the training set");
  train->add_option("--loss-out", tr.loss_out, "Per-epoch loss CSV");

  PredictArgs pr;
  auto* predict = app.add_subcommand("predict", "Predict positions with a trained model");
  predict->add_option("--model", pr.model, "Model JSON")->required();
  predict->add_option("--dataset", pr.dataset, "Dataset CSV")->required();
  predict->add_option("--out", pr.out, "Predictions CSV output")->required();

  SweepArgs sw;
  auto* sweep = app.add_subcommand("sweep", "Cross-validated error over an epochs x layers grid");
  sw.mlp.add_to(sweep, false);
  sweep->add_option("--dataset", sw.dataset, "Dataset CSV")->required();
  sweep->add_option("--epochs-grid", sw.epochs_grid, "Epoch counts (rows)")->capture_default_str();
  sweep->add_option("--layers-grid", sw.layers_grid, "Hidden layer counts (columns)")->capture_default_str();
  sweep->add_option("--folds", sw.folds, "Cross-validation folds")->check(CLI::Range(2, 1000))->capture_default_str();
  sweep->add_option("--jobs", sw.jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  sweep->add_option("--out", sw.out, "Grid CSV output")->required();
  sweep->add_option("--markdown", sw.markdown, "Grid markdown output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*simulate) return run_simulate(sim);
    if (*calibrate) return run_calibrate(cal);
    if (*evaluate) return run_evaluate(ev);
    if (*dataset) return run_dataset(ds);
    if (*train) return run_train(tr);
    if (*predict) return run_predict(pr);
    if (*sweep) return run_sweep(sw);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
