#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "rssiloc/types.hpp"

namespace rssiloc::locnet {

inline constexpr int kInputWidth = 3;
inline constexpr int kOutputWidth = 2;

using RssiTriple = std::array<double, kInputWidth>;

struct MlpConfig {
  int hidden_layers = 3;
  int neurons_per_layer = 32;
  int epochs = 1000;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 0;
  int batch_size = 32;

  /// Throws InputError when a count is < 1, hidden_layers > 5 or a rate is not positive.
  void validate() const;
  friend bool operator==(const MlpConfig&, const MlpConfig&) = default;
};

/// Labeled RSSI triples; labels identify the ground-truth spot for stratification.
struct Dataset {
  std::vector<RssiTriple> inputs;
  std::vector<Position> targets;
  std::vector<std::string> labels;

  std::size_t size() const { return inputs.size(); }
  void validate() const;
  Dataset subset(std::span<const std::size_t> indices) const;
};

struct DenseLayer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;     // out
};

/// Feed-forward regressor RSSI triple -> (x, y): standardize, then
/// affine+ReLU per hidden layer, then a linear output layer of width 2.
class Mlp {
 public:
  Mlp() = default;
  /// Layers sized from `config`, all parameters zero, identity standardization.
  explicit Mlp(const MlpConfig& config);

  /// He-normal weights (sd = sqrt(2 / fan_in)) drawn in layer order, zero biases.
  static Mlp initialize(const MlpConfig& config, std::uint64_t seed);

  Position forward(const RssiTriple& input) const;
  /// Column-per-sample batch: inputs 3 x B (raw dBm) -> outputs 2 x B.
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& inputs) const;

  /// Per-sample loss: squared error summed over both coordinates.
  double loss(const RssiTriple& input, const Position& target) const;
  /// Gradient of loss() w.r.t. parameters(), same flattening order.
  std::vector<double> gradient(const RssiTriple& input, const Position& target) const;

  /// Flattened parameters: per layer, weights row-major then bias.
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> values);
  std::size_t parameter_count() const;

  /// Hidden pre-activations of one sample, concatenated layer by layer.
  std::vector<double> hidden_preactivations(const RssiTriple& input) const;

  const MlpConfig& config() const { return config_; }
  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  Eigen::Vector3d& input_mean() { return input_mean_; }
  const Eigen::Vector3d& input_mean() const { return input_mean_; }
  Eigen::Vector3d& input_std() { return input_std_; }
  const Eigen::Vector3d& input_std() const { return input_std_; }

  /// Sets mean/std from the inputs; zero-variance columns keep a scale of 1.
  void fit_standardization(std::span<const RssiTriple> inputs);

 private:
  Eigen::MatrixXd standardize(const Eigen::MatrixXd& inputs) const;

  MlpConfig config_;
  std::vector<DenseLayer> layers_;
  Eigen::Vector3d input_mean_ = Eigen::Vector3d::Zero();
  Eigen::Vector3d input_std_ = Eigen::Vector3d::Ones();

  friend struct Trainer;
};

struct TrainingResult {
  Mlp model;
  std::vector<double> epoch_loss;  // mean per-sample loss over each epoch's batches
};

/// Adam on mean squared error with per-epoch reshuffled mini-batches. All
/// randomness (initialization then shuffles) comes from one generator seeded
/// with config.seed. Throws InputError for datasets of fewer than 2 samples.
TrainingResult train(const Dataset& dataset, const MlpConfig& config);

std::vector<Position> predict(const Mlp& model, std::span<const RssiTriple> inputs);

/// Fold index per sample. Each label's samples are shuffled with `seed` and
/// dealt round-robin, continuing where the previous label stopped, so
/// per-label counts across folds differ by at most one.
/// Throws InputError naming the first label with fewer than `folds` samples.
std::vector<int> stratified_folds(const Dataset& dataset, int folds, std::uint64_t seed);

struct CvResult {
  double mean_error_cm = 0.0;
  double std_error_cm = 0.0;  // population deviation across folds
  std::vector<double> fold_errors_cm;
};

/// Trains on k-1 folds and scores mean Euclidean error on the held-out fold,
/// for every fold. Fold f trains with seed derive_seed(config.seed, f); the
/// split itself uses derive_seed(config.seed, folds), so results do not
/// depend on `jobs`.
CvResult stratified_kfold_eval(const Dataset& dataset, const MlpConfig& config, int folds = 10,
                               unsigned jobs = 1);

/// Raised when a ReLU input is too close to its kink for finite differences.
class KinkError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GradientCheckResult {
  double max_relative_error = 0.0;
  double max_abs_analytic = 0.0;
  double max_abs_numeric = 0.0;
};

inline constexpr double kGradientCheckStep = 1e-5;
/// Gradients smaller than this in magnitude are compared on an absolute scale.
inline constexpr double kGradientCheckFloor = 1e-6;

/// Analytic gradient vs. central differences over every parameter.
/// Relative error is |a - n| / max(|a|, |n|, kGradientCheckFloor).
/// Throws KinkError if a hidden pre-activation lies within 1e-6 of zero or a
/// perturbation flips any ReLU.
GradientCheckResult gradient_check(const Mlp& model, const RssiTriple& input, const Position& target);

// Model JSON: layer shapes, row-major weights, standardization, config echo.
std::string model_to_json(const Mlp& model);
Mlp model_from_json(std::string_view text, const std::string& source = "<model>");
void save_model(const std::filesystem::path& path, const Mlp& model);
Mlp load_model(const std::filesystem::path& path);

// Dataset CSV: rssi1,rssi2,rssi3,true_x_m,true_y_m,label
inline constexpr std::string_view kDatasetHeader = "rssi1,rssi2,rssi3,true_x_m,true_y_m,label";
void write_dataset(std::ostream& out, const Dataset& dataset);
Dataset read_dataset(std::istream& in, const std::string& source = "<dataset>");
Dataset load_dataset(const std::filesystem::path& path);
void save_dataset(const std::filesystem::path& path, const Dataset& dataset);

/// One sample per reading of the first beacon inside each ground-truth
/// interval, the other beacons aligned to it by nearest timestamp. Labels are
/// "p<interval index>". Readings without a fresh partner are skipped.
Dataset make_dataset(std::span<const RssiSample> trace, const Scenario& scenario,
                     TimestampMs max_staleness = 30000);

}  // namespace rssiloc::locnet
