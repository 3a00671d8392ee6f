#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "rssiloc/error.hpp"
#include "rssiloc/locnet.hpp"
#include "rssiloc/random.hpp"
#include "rssiloc/simulator.hpp"
#include "test_support.hpp"

namespace rssiloc::locnet {
namespace {

MlpConfig small_config(int layers = 2, int neurons = 8) {
  MlpConfig c;
  c.hidden_layers = layers;
  c.neurons_per_layer = neurons;
  c.epochs = 50;
  c.seed = 1;
  return c;
}

// Three well-separated clusters, 40 samples each.
Dataset clusters(std::uint64_t seed, int per_label = 40) {
  Rng rng(seed);
  const RssiTriple centers[] = {{-60, -80, -85}, {-82, -62, -78}, {-84, -79, -61}};
  const Position spots[] = {{0.5, 0.5}, {3.5, 1.0}, {2.0, 3.5}};
  Dataset d;
  for (int label = 0; label < 3; ++label) {
    for (int i = 0; i < per_label; ++i) {
      RssiTriple x;
      for (int c = 0; c < 3; ++c) x[static_cast<std::size_t>(c)] = centers[label][static_cast<std::size_t>(c)] + rng.normal(0, 2);
      d.inputs.push_back(x);
      d.targets.push_back(spots[label]);
      d.labels.push_back("p" + std::to_string(label));
    }
  }
  return d;
}

TEST(MlpConfig, Validation) {
  EXPECT_NO_THROW(MlpConfig{}.validate());
  for (auto mutate : std::vector<void (*)(MlpConfig&)>{
           [](MlpConfig& c) { c.hidden_layers = 0; }, [](MlpConfig& c) { c.hidden_layers = 6; },
           [](MlpConfig& c) { c.neurons_per_layer = 0; }, [](MlpConfig& c) { c.epochs = 0; },
           [](MlpConfig& c) { c.batch_size = 0; }, [](MlpConfig& c) { c.learning_rate = 0; },
           [](MlpConfig& c) { c.adam_beta1 = 1.0; }, [](MlpConfig& c) { c.adam_epsilon = -1; }}) {
    MlpConfig c;
    mutate(c);
    EXPECT_THROW(c.validate(), InputError);
  }
}

TEST(Forward, ZeroNetworkOutputsOrigin) {
  const Mlp m(small_config(3, 5));
  EXPECT_EQ(m.forward({-70, -80, -90}), (Position{0, 0}));
  EXPECT_EQ(m.forward({-40, -100, -55}), (Position{0, 0}));
}

TEST(Forward, OutputBiasPassesThrough) {
  Mlp m(small_config(2, 4));
  m.layers().back().bias << 1.5, 2.0;
  EXPECT_EQ(m.forward({-70, -80, -90}), (Position{1.5, 2.0}));
  EXPECT_EQ(m.forward({-30, -30, -30}), (Position{1.5, 2.0}));
}

TEST(Forward, ShapesAndParameterOrder) {
  const auto m = Mlp::initialize(small_config(3, 6), 4);
  ASSERT_EQ(m.layers().size(), 4u);
  EXPECT_EQ(m.layers()[0].weights.rows(), 6);
  EXPECT_EQ(m.layers()[0].weights.cols(), 3);
  EXPECT_EQ(m.layers()[3].weights.rows(), 2);
  EXPECT_EQ(m.parameter_count(), (3u * 6 + 6) + 2 * (6 * 6 + 6) + (6 * 2 + 2));
  const auto p = m.parameters();
  EXPECT_EQ(p[1], m.layers()[0].weights(0, 1));  // row-major
  EXPECT_EQ(p[3 * 6], m.layers()[0].bias(0));
  Mlp copy(m.config());
  copy.input_mean() = m.input_mean();
  copy.input_std() = m.input_std();
  copy.set_parameters(p);
  EXPECT_EQ(copy.forward({-70, -71, -72}), m.forward({-70, -71, -72}));
  EXPECT_THROW(copy.set_parameters(std::vector<double>(3)), InputError);
}

TEST(Forward, BatchMatchesSingle) {
  const auto m = Mlp::initialize(small_config(3, 7), 9);
  Eigen::MatrixXd x(3, 4);
  x << -70, -60, -90, -75, -80, -66, -55, -71, -65, -88, -77, -79;
  const auto y = m.forward_batch(x);
  for (int i = 0; i < 4; ++i) {
    const auto p = m.forward({x(0, i), x(1, i), x(2, i)});
    EXPECT_DOUBLE_EQ(y(0, i), p.x);
    EXPECT_DOUBLE_EQ(y(1, i), p.y);
  }
}

TEST(Forward, FiniteForFiniteInputAndRejectsNan) {
  const auto m = Mlp::initialize(small_config(5, 32), 2);
  const auto p = m.forward({-1e6, 1e6, 0});
  EXPECT_TRUE(std::isfinite(p.x) && std::isfinite(p.y));
  EXPECT_THROW(m.forward({NAN, -70, -70}), InputError);
}

TEST(Initialize, HeScaleAndZeroBias) {
  const auto m = Mlp::initialize(small_config(2, 400), 3);
  const auto& w = m.layers()[1].weights;  // fan-in 400
  const double mean = w.mean();
  const double sd = std::sqrt((w.array() - mean).square().mean());
  EXPECT_NEAR(sd, std::sqrt(2.0 / 400.0), 0.02 * std::sqrt(2.0 / 400.0));
  EXPECT_EQ(m.layers()[1].bias.squaredNorm(), 0.0);
  EXPECT_EQ(Mlp::initialize(small_config(), 3).parameters(), Mlp::initialize(small_config(), 3).parameters());
  EXPECT_NE(Mlp::initialize(small_config(), 3).parameters(), Mlp::initialize(small_config(), 4).parameters());
}

TEST(Standardization, MeanAndStdFromInputs) {
  Mlp m(small_config());
  const std::vector<RssiTriple> xs = {{-70, -60, -50}, {-80, -60, -40}};
  m.fit_standardization(xs);
  EXPECT_EQ(m.input_mean()(0), -75);
  EXPECT_EQ(m.input_std()(0), 5);
  EXPECT_EQ(m.input_std()(1), 1);  // zero variance keeps unit scale
}

TEST(Loss, SummedSquaredError) {
  Mlp m(small_config());
  m.layers().back().bias << 1.0, 2.0;
  EXPECT_DOUBLE_EQ(m.loss({-70, -70, -70}, {4.0, -2.0}), 9.0 + 16.0);
}

// ---- gradient check ----

Mlp random_smooth_model(Rng& rng, const MlpConfig& config, const RssiTriple& x) {
  while (true) {
    auto m = Mlp::initialize(config, rng.next());
    for (auto& layer : m.layers())
      for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = rng.normal(0, 0.3);
    m.input_mean() << -75, -75, -75;
    m.input_std() << 8, 8, 8;
    bool smooth = true;
    for (double v : m.hidden_preactivations(x)) smooth &= std::abs(v) > 1e-3;
    if (smooth) return m;
  }
}

TEST(GradientCheck, RandomSmoothConfigurations) {
  Rng rng(2024);
  int checked = 0;
  while (checked < 20) {
    MlpConfig c = small_config(static_cast<int>(rng.uniform_int(1, 5)), static_cast<int>(rng.uniform_int(2, 12)));
    const RssiTriple x = {rng.normal(-75, 8), rng.normal(-75, 8), rng.normal(-75, 8)};
    const Position t{rng.normal(2, 1), rng.normal(2, 1)};
    const auto m = random_smooth_model(rng, c, x);
    try {
      const auto r = gradient_check(m, x, t);
      EXPECT_LT(r.max_relative_error, 1e-4);
      ++checked;
    } catch (const KinkError&) {
    }
  }
}

TEST(GradientCheck, LinearNetworkIsExact) {
  Rng rng(7);
  auto c = small_config(3, 6);
  auto m = Mlp::initialize(c, 11);
  for (std::size_t l = 0; l + 1 < m.layers().size(); ++l) {
    m.layers()[l].weights = m.layers()[l].weights.cwiseAbs() * 0.1;
    m.layers()[l].bias.setConstant(5.0);  // every hidden unit stays positive
  }
  m.input_mean() << -75, -75, -75;
  m.input_std() << 8, 8, 8;
  const RssiTriple x = {-70, -72, -81};
  for (double v : m.hidden_preactivations(x)) ASSERT_GT(v, 1.0);
  const auto r = gradient_check(m, x, {1.0, 3.0});
  EXPECT_LT(r.max_relative_error, 1e-7);
}

TEST(GradientCheck, ZeroGradientAtPerfectFit) {
  auto m = Mlp::initialize(small_config(2, 5), 5);
  for (auto& layer : m.layers()) layer.bias.setConstant(0.5);
  m.layers().back().weights.setZero();
  m.layers().back().bias << 1.25, -0.5;
  const RssiTriple x = {-70, -72, -81};
  const auto r = gradient_check(m, x, {1.25, -0.5});
  EXPECT_LT(r.max_abs_analytic, 1e-8);
  EXPECT_LT(r.max_abs_numeric, 1e-8);
}

TEST(GradientCheck, KinkProximityIsSignalled) {
  auto m = Mlp::initialize(small_config(1, 4), 5);
  m.input_mean() << -70, -70, -70;
  m.layers()[0].bias.setZero();
  // Standardized input of zero puts every pre-activation on the kink.
  EXPECT_THROW(gradient_check(m, {-70, -70, -70}, {1, 1}), KinkError);
}

TEST(GradientCheck, AgreesWithPlainDoubleDifferences) {
  Rng rng(99);
  const RssiTriple x = {-66, -79, -84};
  const Position t{2.5, 0.5};
  const auto m = random_smooth_model(rng, small_config(2, 5), x);
  const auto g = m.gradient(x, t);
  auto p = m.parameters();
  Mlp probe = m;
  const double h = 1e-6;
  for (std::size_t i = 0; i < p.size(); i += 3) {
    const double saved = p[i];
    p[i] = saved + h;
    probe.set_parameters(p);
    const double up = probe.loss(x, t);
    p[i] = saved - h;
    probe.set_parameters(p);
    const double down = probe.loss(x, t);
    p[i] = saved;
    const double numeric = (up - down) / (2 * h);
    EXPECT_NEAR(g[i], numeric, 1e-5 * std::max(1.0, std::abs(numeric))) << i;
  }
}

// ---- training ----

TEST(Train, DeterministicForSeed) {
  const auto d = clusters(1);
  const auto a = train(d, small_config());
  const auto b = train(d, small_config());
  EXPECT_EQ(a.model.parameters(), b.model.parameters());
  EXPECT_EQ(a.epoch_loss, b.epoch_loss);
  EXPECT_EQ(model_to_json(a.model), model_to_json(b.model));
  auto other = small_config();
  other.seed = 2;
  EXPECT_NE(train(d, other).model.parameters(), a.model.parameters());
}

TEST(Train, LossDecreases) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    auto c = small_config(3, 16);
    c.epochs = 100;
    c.seed = seed;
    const auto r = train(clusters(seed + 10), c);
    ASSERT_EQ(r.epoch_loss.size(), 100u);
    EXPECT_LT(r.epoch_loss[99], r.epoch_loss[0]);
  }
}

TEST(Train, ConstantDatasetLearnsTheConstant) {
  Dataset d;
  for (int i = 0; i < 64; ++i) {
    d.inputs.push_back({-70, -70, -70});
    d.targets.push_back({1, 1});
    d.labels.push_back("p");
  }
  // Only the output bias learns; Adam moves it about lr per step.
  auto c = small_config(2, 8);
  c.epochs = 2000;
  const auto r = train(d, c);
  const auto p = r.model.forward({-70, -70, -70});
  EXPECT_LT(euclidean(p, {1, 1}), 1e-3);
}

TEST(Train, FitsSeparableClusters) {
  auto c = small_config(3, 32);
  c.epochs = 300;
  const auto d = clusters(3);
  const auto r = train(d, c);
  const auto predictions = predict(r.model, d.inputs);
  double err = 0;
  for (std::size_t i = 0; i < d.size(); ++i) err += euclidean(predictions[i], d.targets[i]);
  EXPECT_LT(err / static_cast<double>(d.size()), 0.15);
}

TEST(Train, RejectsDegenerateInputs) {
  auto d = clusters(1);
  EXPECT_THROW(train(d.subset(std::vector<std::size_t>{0}), small_config()), InputError);
  auto bad = small_config();
  bad.hidden_layers = 9;
  EXPECT_THROW(train(d, bad), InputError);
  d.labels.pop_back();
  EXPECT_THROW(train(d, small_config()), InputError);
}

// ---- folds ----

TEST(StratifiedFolds, PartitionAndBalance) {
  // Uneven label sizes: p1 loses a third of its samples.
  const auto base = clusters(4, 40);
  std::vector<std::size_t> pick;
  for (std::size_t i = 0; i < base.size(); ++i)
    if (base.labels[i] != "p1" || i % 3 != 0) pick.push_back(i);
  const auto d = base.subset(pick);
  for (int folds : {2, 3, 10}) {
    const auto f = stratified_folds(d, folds, 17);
    ASSERT_EQ(f.size(), d.size());
    std::map<std::string, std::vector<int>> counts;
    for (std::size_t i = 0; i < d.size(); ++i) {
      ASSERT_GE(f[i], 0);
      ASSERT_LT(f[i], folds);
      auto& c = counts[d.labels[i]];
      c.resize(static_cast<std::size_t>(folds));
      ++c[static_cast<std::size_t>(f[i])];
    }
    for (const auto& [label, c] : counts) {
      const auto [lo, hi] = std::minmax_element(c.begin(), c.end());
      EXPECT_LE(*hi - *lo, 1) << label << " folds=" << folds;
    }
    EXPECT_EQ(f, stratified_folds(d, folds, 17));
  }
}

TEST(StratifiedFolds, TooFewSamplesNamesTheLabel) {
  auto d = clusters(5, 12);
  d.inputs.push_back({-70, -70, -70});
  d.targets.push_back({9, 9});
  d.labels.push_back("lonely");
  try {
    stratified_folds(d, 10, 1);
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("lonely"), std::string::npos);
  }
  EXPECT_THROW(stratified_folds(clusters(5, 12), 1, 1), InputError);
}

TEST(KFold, IndependentOfJobs) {
  const auto d = clusters(6, 20);
  auto c = small_config(2, 8);
  c.epochs = 20;
  const auto one = stratified_kfold_eval(d, c, 4, 1);
  const auto many = stratified_kfold_eval(d, c, 4, 3);
  EXPECT_EQ(one.fold_errors_cm, many.fold_errors_cm);
  EXPECT_EQ(one.mean_error_cm, many.mean_error_cm);
  ASSERT_EQ(one.fold_errors_cm.size(), 4u);
  double mean = 0, ss = 0;
  for (double e : one.fold_errors_cm) mean += e / 4;
  for (double e : one.fold_errors_cm) ss += (e - mean) * (e - mean) / 4;
  EXPECT_DOUBLE_EQ(one.mean_error_cm, mean);
  EXPECT_DOUBLE_EQ(one.std_error_cm, std::sqrt(ss));
}

TEST(KFold, ConstantTargetsGiveNearZeroError) {
  Dataset d;
  for (int i = 0; i < 40; ++i) {
    d.inputs.push_back({-70, -70, -70});
    d.targets.push_back({0.3, 0.4});
    d.labels.push_back(i % 2 ? "a" : "b");
  }
  // One Adam step per epoch, so the target sits within 1500 * lr of the origin.
  auto c = small_config(1, 4);
  c.epochs = 1500;
  const auto r = stratified_kfold_eval(d, c, 4);
  EXPECT_LT(r.mean_error_cm, 0.1);
  EXPECT_LT(r.std_error_cm, 0.1);
}

// ---- files ----

TEST(ModelJson, RoundTripIsExact) {
  auto c = small_config(3, 6);
  c.epochs = 5;
  const auto r = train(clusters(2), c);
  const auto text = model_to_json(r.model);
  const auto back = model_from_json(text);
  EXPECT_EQ(model_to_json(back), text);
  EXPECT_EQ(back.parameters(), r.model.parameters());
  EXPECT_EQ(back.config(), r.model.config());
  const auto d = clusters(8);
  EXPECT_EQ(predict(back, d.inputs), predict(r.model, d.inputs));
}

TEST(ModelJson, RejectsForeignDocuments) {
  EXPECT_THROW(model_from_json("[]"), ParseError);
  EXPECT_THROW(model_from_json(R"({"format": "other", "version": 1})"), ParseError);
  auto text = model_to_json(Mlp(small_config()));
  text.replace(text.find("\"version\": 1"), 12, "\"version\": 2");
  EXPECT_THROW(model_from_json(text), ParseError);
}

TEST(ModelFile, SaveLoad) {
  test::TempDir dir;
  const auto m = Mlp::initialize(small_config(), 5);
  save_model(dir / "m.json", m);
  EXPECT_EQ(load_model(dir / "m.json").parameters(), m.parameters());
}

TEST(DatasetCsv, RoundTrip) {
  const auto d = clusters(3, 5);
  std::ostringstream out;
  write_dataset(out, d);
  EXPECT_EQ(out.str().substr(0, kDatasetHeader.size()), kDatasetHeader);
  std::istringstream in(out.str());
  const auto back = read_dataset(in);
  EXPECT_EQ(back.inputs, d.inputs);
  EXPECT_EQ(back.targets, d.targets);
  EXPECT_EQ(back.labels, d.labels);
  std::istringstream bad(std::string(kDatasetHeader) + "\n-70,-70,x,1,1,p\n");
  EXPECT_THROW(read_dataset(bad, "d.csv"), ParseError);
}

TEST(MakeDataset, HomeFixtureShape) {
  const auto home = simulator::home_scenario();
  const auto trace = simulator::simulate(home, {4.0, 1, 4500, 500}).trace;
  const auto d = make_dataset(trace, home);
  EXPECT_EQ(d.size(), 600u);
  std::map<std::string, int> per_label;
  for (std::size_t i = 0; i < d.size(); ++i) {
    ++per_label[d.labels[i]];
    const auto iv = static_cast<std::size_t>(std::stoi(d.labels[i].substr(1)));
    EXPECT_EQ(d.targets[i], home.ground_truth[iv].position);
  }
  EXPECT_EQ(per_label, (std::map<std::string, int>{{"p0", 200}, {"p1", 200}, {"p2", 200}}));
}

}  // namespace
}  // namespace rssiloc::locnet
