#include "rssiloc/locnet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "rssiloc/error.hpp"
#include "rssiloc/eval.hpp"
#include "rssiloc/io.hpp"
#include "rssiloc/parallel.hpp"
#include "rssiloc/random.hpp"

namespace rssiloc::locnet {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void MlpConfig::validate() const {
  if (hidden_layers < 1 || hidden_layers > 5) throw InputError("hidden_layers must be in 1..5");
  if (neurons_per_layer < 1) throw InputError("neurons_per_layer must be >= 1");
  if (epochs < 1) throw InputError("epochs must be >= 1");
  if (batch_size < 1) throw InputError("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw InputError("learning_rate must be > 0");
  if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0) || !(adam_beta2 > 0.0 && adam_beta2 < 1.0)) {
    throw InputError("adam betas must be in (0, 1)");
  }
  if (!(adam_epsilon > 0.0)) throw InputError("adam_epsilon must be > 0");
}

void Dataset::validate() const {
  if (inputs.size() != targets.size() || inputs.size() != labels.size()) {
    throw InputError("dataset columns have different lengths");
  }
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    for (double v : inputs[i]) {
      if (!std::isfinite(v)) throw InputError("dataset row " + std::to_string(i) + " has a non-finite rssi");
    }
    if (!std::isfinite(targets[i].x) || !std::isfinite(targets[i].y)) {
      throw InputError("dataset row " + std::to_string(i) + " has a non-finite target");
    }
  }
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.inputs.reserve(indices.size());
  out.targets.reserve(indices.size());
  out.labels.reserve(indices.size());
  for (auto i : indices) {
    out.inputs.push_back(inputs.at(i));
    out.targets.push_back(targets.at(i));
    out.labels.push_back(labels.at(i));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Mlp

Mlp::Mlp(const MlpConfig& config) : config_(config) {
  config_.validate();
  int fan_in = kInputWidth;
  for (int l = 0; l < config_.hidden_layers; ++l) {
    layers_.push_back({MatrixXd::Zero(config_.neurons_per_layer, fan_in), VectorXd::Zero(config_.neurons_per_layer)});
    fan_in = config_.neurons_per_layer;
  }
  layers_.push_back({MatrixXd::Zero(kOutputWidth, fan_in), VectorXd::Zero(kOutputWidth)});
}

namespace {

void he_initialize(Mlp& model, Rng& rng) {
  for (auto& layer : model.layers()) {
    const double sd = std::sqrt(2.0 / static_cast<double>(layer.weights.cols()));
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) layer.weights(r, c) = sd * rng.normal();
    }
    layer.bias.setZero();
  }
}

MatrixXd to_matrix(std::span<const RssiTriple> inputs) {
  MatrixXd m(kInputWidth, static_cast<Eigen::Index>(inputs.size()));
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    for (int r = 0; r < kInputWidth; ++r) m(r, static_cast<Eigen::Index>(i)) = inputs[i][static_cast<std::size_t>(r)];
  }
  return m;
}

}  // namespace

Mlp Mlp::initialize(const MlpConfig& config, std::uint64_t seed) {
  Mlp model(config);
  Rng rng(seed);
  he_initialize(model, rng);
  return model;
}

void Mlp::fit_standardization(std::span<const RssiTriple> inputs) {
  if (inputs.empty()) throw InputError("cannot standardize on an empty input set");
  const double n = static_cast<double>(inputs.size());
  for (int c = 0; c < kInputWidth; ++c) {
    double sum = 0.0;
    for (const auto& x : inputs) sum += x[static_cast<std::size_t>(c)];
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& x : inputs) ss += (x[static_cast<std::size_t>(c)] - mean) * (x[static_cast<std::size_t>(c)] - mean);
    const double sd = std::sqrt(ss / n);
    input_mean_(c) = mean;
    input_std_(c) = sd > 1e-12 ? sd : 1.0;
  }
}

MatrixXd Mlp::standardize(const MatrixXd& inputs) const {
  return (inputs.colwise() - input_mean_).array().colwise() / input_std_.array();
}

MatrixXd Mlp::forward_batch(const MatrixXd& inputs) const {
  MatrixXd h = standardize(inputs);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    MatrixXd a = layers_[l].weights * h;
    a.colwise() += layers_[l].bias;
    if (l + 1 < layers_.size()) {
      h = a.cwiseMax(0.0);
    } else {
      h = std::move(a);
    }
  }
  return h;
}

Position Mlp::forward(const RssiTriple& input) const {
  for (double v : input) {
    if (!std::isfinite(v)) throw InputError("network input must be finite");
  }
  const MatrixXd out = forward_batch(to_matrix(std::span(&input, 1)));
  return {out(0, 0), out(1, 0)};
}

double Mlp::loss(const RssiTriple& input, const Position& target) const {
  const Position p = forward(input);
  return (p.x - target.x) * (p.x - target.x) + (p.y - target.y) * (p.y - target.y);
}

std::vector<double> Mlp::hidden_preactivations(const RssiTriple& input) const {
  std::vector<double> out;
  MatrixXd h = standardize(to_matrix(std::span(&input, 1)));
  for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
    MatrixXd a = layers_[l].weights * h;
    a.colwise() += layers_[l].bias;
    for (Eigen::Index r = 0; r < a.rows(); ++r) out.push_back(a(r, 0));
    h = a.cwiseMax(0.0);
  }
  return out;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
  return n;
}

std::vector<double> Mlp::parameters() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (const auto& l : layers_) {
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) out.push_back(l.weights(r, c));
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) out.push_back(l.bias(r));
  }
  return out;
}

void Mlp::set_parameters(std::span<const double> values) {
  if (values.size() != parameter_count()) throw InputError("parameter vector has the wrong length");
  std::size_t k = 0;
  for (auto& l : layers_) {
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) l.weights(r, c) = values[k++];
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = values[k++];
  }
}

// ---------------------------------------------------------------------------
// Training

struct Gradients {
  std::vector<MatrixXd> weights;
  std::vector<VectorXd> bias;
};

/// Backpropagation of the batch-mean per-sample loss.
struct Trainer {
  static double backprop(const Mlp& model, const MatrixXd& inputs, const MatrixXd& targets, Gradients& grads) {
    const auto& layers = model.layers_;
    const std::size_t depth = layers.size();
    const double batch = static_cast<double>(inputs.cols());

    std::vector<MatrixXd> activations(depth);  // input to layer l
    std::vector<MatrixXd> preacts(depth);
    activations[0] = model.standardize(inputs);
    for (std::size_t l = 0; l < depth; ++l) {
      preacts[l] = layers[l].weights * activations[l];
      preacts[l].colwise() += layers[l].bias;
      if (l + 1 < depth) activations[l + 1] = preacts[l].cwiseMax(0.0);
    }
    const MatrixXd diff = preacts[depth - 1] - targets;
    const double loss = diff.squaredNorm() / batch;

    grads.weights.resize(depth);
    grads.bias.resize(depth);
    MatrixXd delta = (2.0 / batch) * diff;
    for (std::size_t l = depth; l-- > 0;) {
      grads.weights[l].noalias() = delta * activations[l].transpose();
      grads.bias[l] = delta.rowwise().sum();
      if (l > 0) {
        MatrixXd back = layers[l].weights.transpose() * delta;
        delta = back.cwiseProduct((preacts[l - 1].array() > 0.0).cast<double>().matrix());
      }
    }
    return loss;
  }
};

std::vector<double> Mlp::gradient(const RssiTriple& input, const Position& target) const {
  MatrixXd t(kOutputWidth, 1);
  t << target.x, target.y;
  Gradients g;
  Trainer::backprop(*this, to_matrix(std::span(&input, 1)), t, g);
  std::vector<double> out;
  out.reserve(parameter_count());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    for (Eigen::Index r = 0; r < g.weights[l].rows(); ++r)
      for (Eigen::Index c = 0; c < g.weights[l].cols(); ++c) out.push_back(g.weights[l](r, c));
    for (Eigen::Index r = 0; r < g.bias[l].size(); ++r) out.push_back(g.bias[l](r));
  }
  return out;
}

namespace {

MatrixXd targets_matrix(std::span<const Position> targets) {
  MatrixXd m(kOutputWidth, static_cast<Eigen::Index>(targets.size()));
  for (std::size_t i = 0; i < targets.size(); ++i) {
    m(0, static_cast<Eigen::Index>(i)) = targets[i].x;
    m(1, static_cast<Eigen::Index>(i)) = targets[i].y;
  }
  return m;
}

}  // namespace

TrainingResult train(const Dataset& dataset, const MlpConfig& config) {
  config.validate();
  dataset.validate();
  if (dataset.size() < 2) throw InputError("training needs at least 2 samples, got " + std::to_string(dataset.size()));

  Rng rng(config.seed);
  TrainingResult result;
  Mlp& model = result.model;
  model = Mlp(config);
  he_initialize(model, rng);
  model.fit_standardization(dataset.inputs);

  const MatrixXd inputs = to_matrix(dataset.inputs);
  const MatrixXd targets = targets_matrix(dataset.targets);
  const auto n = static_cast<Eigen::Index>(dataset.size());

  auto& layers = model.layers();
  std::vector<MatrixXd> m_w, v_w;
  std::vector<VectorXd> m_b, v_b;
  for (const auto& l : layers) {
    m_w.push_back(MatrixXd::Zero(l.weights.rows(), l.weights.cols()));
    v_w.push_back(MatrixXd::Zero(l.weights.rows(), l.weights.cols()));
    m_b.push_back(VectorXd::Zero(l.bias.size()));
    v_b.push_back(VectorXd::Zero(l.bias.size()));
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;

  const double b1 = config.adam_beta1;
  const double b2 = config.adam_beta2;
  double b1_pow = 1.0;
  double b2_pow = 1.0;
  Gradients grads;
  MatrixXd batch_in, batch_out;
  result.epoch_loss.reserve(static_cast<std::size_t>(config.epochs));

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(std::span(order));
    double epoch_loss = 0.0;
    for (Eigen::Index start = 0; start < n; start += config.batch_size) {
      const Eigen::Index size = std::min<Eigen::Index>(config.batch_size, n - start);
      batch_in.resize(kInputWidth, size);
      batch_out.resize(kOutputWidth, size);
      for (Eigen::Index j = 0; j < size; ++j) {
        const auto src = order[static_cast<std::size_t>(start + j)];
        batch_in.col(j) = inputs.col(src);
        batch_out.col(j) = targets.col(src);
      }
      epoch_loss += Trainer::backprop(model, batch_in, batch_out, grads) * static_cast<double>(size);

      b1_pow *= b1;
      b2_pow *= b2;
      const double step = config.learning_rate / (1.0 - b1_pow);
      const double v_scale = 1.0 / (1.0 - b2_pow);
      for (std::size_t l = 0; l < layers.size(); ++l) {
        m_w[l] = b1 * m_w[l] + (1.0 - b1) * grads.weights[l];
        v_w[l] = b2 * v_w[l] + (1.0 - b2) * grads.weights[l].cwiseAbs2();
        layers[l].weights.array() -=
            step * m_w[l].array() / ((v_w[l].array() * v_scale).sqrt() + config.adam_epsilon);
        m_b[l] = b1 * m_b[l] + (1.0 - b1) * grads.bias[l];
        v_b[l] = b2 * v_b[l] + (1.0 - b2) * grads.bias[l].cwiseAbs2();
        layers[l].bias.array() -= step * m_b[l].array() / ((v_b[l].array() * v_scale).sqrt() + config.adam_epsilon);
      }
    }
    result.epoch_loss.push_back(epoch_loss / static_cast<double>(n));
  }
  return result;
}

std::vector<Position> predict(const Mlp& model, std::span<const RssiTriple> inputs) {
  for (const auto& x : inputs) {
    for (double v : x) {
      if (!std::isfinite(v)) throw InputError("network input must be finite");
    }
  }
  std::vector<Position> out;
  if (inputs.empty()) return out;
  const MatrixXd y = model.forward_batch(to_matrix(inputs));
  out.reserve(inputs.size());
  for (Eigen::Index i = 0; i < y.cols(); ++i) out.push_back({y(0, i), y(1, i)});
  return out;
}

// ---------------------------------------------------------------------------
// Cross-validation

std::vector<int> stratified_folds(const Dataset& dataset, int folds, std::uint64_t seed) {
  if (folds < 2) throw InputError("stratified k-fold needs at least 2 folds");
  dataset.validate();

  std::vector<std::string> order;
  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    auto [it, inserted] = members.try_emplace(dataset.labels[i]);
    if (inserted) order.push_back(dataset.labels[i]);
    it->second.push_back(i);
  }
  for (const auto& label : order) {
    const auto count = members[label].size();
    if (count < static_cast<std::size_t>(folds)) {
      throw InputError("label '" + label + "' has " + std::to_string(count) + " samples, fewer than " +
                       std::to_string(folds) + " folds");
    }
  }

  Rng rng(seed);
  std::vector<int> fold_of(dataset.size(), -1);
  std::size_t next = 0;
  for (const auto& label : order) {
    auto& idx = members[label];
    rng.shuffle(std::span(idx));
    for (auto i : idx) fold_of[i] = static_cast<int>(next++ % static_cast<std::size_t>(folds));
  }
  return fold_of;
}

CvResult stratified_kfold_eval(const Dataset& dataset, const MlpConfig& config, int folds, unsigned jobs) {
  config.validate();
  const auto fold_of = stratified_folds(dataset, folds, derive_seed(config.seed, static_cast<std::uint64_t>(folds)));

  CvResult result;
  result.fold_errors_cm.assign(static_cast<std::size_t>(folds), 0.0);
  parallel_for(static_cast<std::size_t>(folds), jobs, [&](std::size_t f) {
    std::vector<std::size_t> train_idx, test_idx;
    for (std::size_t i = 0; i < fold_of.size(); ++i) {
      (fold_of[i] == static_cast<int>(f) ? test_idx : train_idx).push_back(i);
    }
    MlpConfig fold_config = config;
    fold_config.seed = derive_seed(config.seed, f);
    const auto trained = train(dataset.subset(train_idx), fold_config);
    const Dataset held_out = dataset.subset(test_idx);
    const auto predicted = predict(trained.model, held_out.inputs);
    double sum = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) sum += euclidean(predicted[i], held_out.targets[i]);
    result.fold_errors_cm[f] = 100.0 * sum / static_cast<double>(predicted.size());
  });

  double sum = 0.0;
  for (double e : result.fold_errors_cm) sum += e;
  result.mean_error_cm = sum / folds;
  double ss = 0.0;
  for (double e : result.fold_errors_cm) ss += (e - result.mean_error_cm) * (e - result.mean_error_cm);
  result.std_error_cm = std::sqrt(ss / folds);
  return result;
}

// ---------------------------------------------------------------------------
// Gradient check

namespace {

/// Scalar extended-precision forward pass over flattened parameters. Kept
/// separate from the Eigen path it validates. Appends the ReLU on/off
/// pattern to `pattern` when provided.
long double reference_loss(const Mlp& model, std::span<const long double> params, const RssiTriple& input,
                           const Position& target, std::vector<bool>* pattern) {
  std::vector<long double> h(kInputWidth);
  for (int c = 0; c < kInputWidth; ++c) {
    h[static_cast<std::size_t>(c)] =
        (static_cast<long double>(input[static_cast<std::size_t>(c)]) - model.input_mean()(c)) / model.input_std()(c);
  }
  std::size_t k = 0;
  const auto& layers = model.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto rows = static_cast<std::size_t>(layers[l].weights.rows());
    const auto cols = static_cast<std::size_t>(layers[l].weights.cols());
    std::vector<long double> a(rows, 0.0L);
    for (std::size_t r = 0; r < rows; ++r) {
      long double sum = 0.0L;
      for (std::size_t c = 0; c < cols; ++c) sum += params[k++] * h[c];
      a[r] = sum;
    }
    for (std::size_t r = 0; r < rows; ++r) a[r] += params[k++];
    if (l + 1 < layers.size()) {
      for (auto& v : a) {
        if (pattern) pattern->push_back(v > 0.0L);
        v = v > 0.0L ? v : 0.0L;
      }
    }
    h = std::move(a);
  }
  const long double dx = h[0] - target.x;
  const long double dy = h[1] - target.y;
  return dx * dx + dy * dy;
}

}  // namespace

GradientCheckResult gradient_check(const Mlp& model, const RssiTriple& input, const Position& target) {
  for (double v : model.hidden_preactivations(input)) {
    if (std::abs(v) < 1e-6) throw KinkError("hidden pre-activation within 1e-6 of the ReLU kink");
  }
  const auto analytic = model.gradient(input, target);
  const auto base = model.parameters();
  std::vector<long double> params(base.begin(), base.end());

  std::vector<bool> reference_pattern;
  reference_loss(model, params, input, target, &reference_pattern);

  GradientCheckResult result;
  std::vector<bool> pattern;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const long double saved = params[i];
    params[i] = saved + kGradientCheckStep;
    pattern.clear();
    const long double up = reference_loss(model, params, input, target, &pattern);
    if (pattern != reference_pattern) throw KinkError("finite-difference step crosses a ReLU kink");
    params[i] = saved - kGradientCheckStep;
    pattern.clear();
    const long double down = reference_loss(model, params, input, target, &pattern);
    if (pattern != reference_pattern) throw KinkError("finite-difference step crosses a ReLU kink");
    params[i] = saved;

    const auto numeric = static_cast<double>((up - down) / (2.0L * static_cast<long double>(kGradientCheckStep)));
    const double a = analytic[i];
    const double scale = std::max({std::abs(a), std::abs(numeric), kGradientCheckFloor});
    result.max_relative_error = std::max(result.max_relative_error, std::abs(a - numeric) / scale);
    result.max_abs_analytic = std::max(result.max_abs_analytic, std::abs(a));
    result.max_abs_numeric = std::max(result.max_abs_numeric, std::abs(numeric));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Model JSON

using json = nlohmann::ordered_json;

std::string model_to_json(const Mlp& model) {
  const auto& c = model.config();
  json doc;
  doc["format"] = "rssiloc-mlp";
  doc["version"] = 1;
  doc["config"] = {{"hidden_layers", c.hidden_layers},   {"neurons_per_layer", c.neurons_per_layer},
                   {"epochs", c.epochs},                 {"learning_rate", c.learning_rate},
                   {"adam_beta1", c.adam_beta1},         {"adam_beta2", c.adam_beta2},
                   {"adam_epsilon", c.adam_epsilon},     {"seed", c.seed},
                   {"batch_size", c.batch_size}};
  doc["standardization"] = {
      {"mean", {model.input_mean()(0), model.input_mean()(1), model.input_mean()(2)}},
      {"std", {model.input_std()(0), model.input_std()(1), model.input_std()(2)}},
  };
  doc["layers"] = json::array();
  for (const auto& l : model.layers()) {
    json w = json::array();
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
      for (Eigen::Index col = 0; col < l.weights.cols(); ++col) w.push_back(l.weights(r, col));
    json b = json::array();
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) b.push_back(l.bias(r));
    doc["layers"].push_back({{"inputs", l.weights.cols()}, {"outputs", l.weights.rows()}, {"weights", w}, {"bias", b}});
  }
  return doc.dump(2) + "\n";
}

Mlp model_from_json(std::string_view text, const std::string& source) {
  try {
    const json doc = json::parse(text);
    if (doc.at("format") != "rssiloc-mlp") throw ParseError(source, 0, "not an rssiloc-mlp model");
    if (doc.at("version") != 1) throw ParseError(source, 0, "unsupported model version");
    const auto& jc = doc.at("config");
    MlpConfig c;
    c.hidden_layers = jc.at("hidden_layers").get<int>();
    c.neurons_per_layer = jc.at("neurons_per_layer").get<int>();
    c.epochs = jc.at("epochs").get<int>();
    c.learning_rate = jc.at("learning_rate").get<double>();
    c.adam_beta1 = jc.at("adam_beta1").get<double>();
    c.adam_beta2 = jc.at("adam_beta2").get<double>();
    c.adam_epsilon = jc.at("adam_epsilon").get<double>();
    c.seed = jc.at("seed").get<std::uint64_t>();
    c.batch_size = jc.at("batch_size").get<int>();
    Mlp model(c);
    const auto& mean = doc.at("standardization").at("mean");
    const auto& sd = doc.at("standardization").at("std");
    for (int i = 0; i < kInputWidth; ++i) {
      model.input_mean()(i) = mean.at(static_cast<std::size_t>(i)).get<double>();
      model.input_std()(i) = sd.at(static_cast<std::size_t>(i)).get<double>();
    }
    const auto& jl = doc.at("layers");
    if (jl.size() != model.layers().size()) throw ParseError(source, 0, "layer count does not match config");
    for (std::size_t l = 0; l < jl.size(); ++l) {
      auto& layer = model.layers()[l];
      const auto& w = jl[l].at("weights");
      const auto& b = jl[l].at("bias");
      if (jl[l].at("inputs").get<Eigen::Index>() != layer.weights.cols() ||
          jl[l].at("outputs").get<Eigen::Index>() != layer.weights.rows() ||
          w.size() != static_cast<std::size_t>(layer.weights.size()) ||
          b.size() != static_cast<std::size_t>(layer.bias.size())) {
        throw ParseError(source, 0, "layer " + std::to_string(l) + " has inconsistent shape");
      }
      std::size_t k = 0;
      for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
        for (Eigen::Index col = 0; col < layer.weights.cols(); ++col) layer.weights(r, col) = w[k++].get<double>();
      for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias(r) = b[static_cast<std::size_t>(r)].get<double>();
    }
    return model;
  } catch (const json::exception& e) {
    throw ParseError(source, 0, e.what());
  } catch (const InputError& e) {
    throw ParseError(source, 0, e.what());
  }
}

void save_model(const std::filesystem::path& path, const Mlp& model) { io::write_file(path, model_to_json(model)); }

Mlp load_model(const std::filesystem::path& path) { return model_from_json(io::read_file(path), path.string()); }

// ---------------------------------------------------------------------------
// Dataset CSV

void write_dataset(std::ostream& out, const Dataset& dataset) {
  out << kDatasetHeader << '\n';
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& x = dataset.inputs[i];
    out << io::format_double(x[0]) << ',' << io::format_double(x[1]) << ',' << io::format_double(x[2]) << ','
        << io::format_double(dataset.targets[i].x) << ',' << io::format_double(dataset.targets[i].y) << ','
        << dataset.labels[i] << '\n';
  }
}

Dataset read_dataset(std::istream& in, const std::string& source) {
  Dataset d;
  io::read_csv(in, source, kDatasetHeader, 6, [&](const std::vector<std::string>& f, std::size_t) {
    RssiTriple x{io::parse_double(f[0]), io::parse_double(f[1]), io::parse_double(f[2])};
    for (double v : x) {
      if (!std::isfinite(v)) throw InputError("non-finite rssi");
    }
    Position t{io::parse_double(f[3]), io::parse_double(f[4])};
    if (f[5].empty()) throw InputError("empty label");
    d.inputs.push_back(x);
    d.targets.push_back(t);
    d.labels.push_back(f[5]);
  });
  return d;
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
  return read_dataset(in, path.string());
}

void save_dataset(const std::filesystem::path& path, const Dataset& dataset) {
  std::ostringstream out;
  write_dataset(out, dataset);
  io::write_file(path, out.str());
}

Dataset make_dataset(std::span<const RssiSample> trace, const Scenario& scenario, TimestampMs max_staleness) {
  validate(scenario);
  if (scenario.beacons.size() != static_cast<std::size_t>(kInputWidth)) {
    throw InputError("the network takes exactly 3 beacons, scenario has " + std::to_string(scenario.beacons.size()));
  }
  const auto ids = scenario.beacon_ids();
  Dataset d;
  for (std::size_t iv = 0; iv < scenario.ground_truth.size(); ++iv) {
    const auto& interval = scenario.ground_truth[iv];
    auto first = std::lower_bound(trace.begin(), trace.end(), interval.start,
                                  [](const RssiSample& s, TimestampMs t) { return s.timestamp < t; });
    auto last = std::upper_bound(trace.begin(), trace.end(), interval.end,
                                 [](TimestampMs t, const RssiSample& s) { return t < s.timestamp; });
    const std::span<const RssiSample> window(first, last);
    for (const auto& s : window) {
      if (s.beacon_id != ids[0]) continue;
      std::vector<double> rssi;
      try {
        rssi = eval::align(window, ids, s.timestamp, max_staleness);
      } catch (const StalenessError&) {
        continue;
      }
      d.inputs.push_back({rssi[0], rssi[1], rssi[2]});
      d.targets.push_back(interval.position);
      d.labels.push_back("p" + std::to_string(iv));
    }
  }
  return d;
}

}  // namespace rssiloc::locnet
