#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "sid/errors.hpp"
#include "sid/random.hpp"
#include "sid/refmodel.hpp"
#include "test_support.hpp"

using namespace sid;

namespace {

RefModel random_model(CounterRng& rng, int classes, int dim) {
  LabelSpace labels;
  for (int c = 0; c < classes; ++c) labels.push_back(c == 0 ? "authentic" : "gen" + std::to_string(c));
  RefModel m = RefModel::zeros(labels, dim);
  for (auto& w : m.weights) w = rng.uniform(-1.0, 1.0);
  for (auto& b : m.bias) b = rng.uniform(-1.0, 1.0);
  for (int d = 0; d < dim; ++d) {
    m.norm_mean[d] = rng.uniform(-0.5, 0.5);
    m.norm_scale[d] = rng.uniform(0.5, 2.0);
  }
  return m;
}

LabeledFeatures random_batch(CounterRng& rng, int n, int classes, int dim) {
  LabeledFeatures b;
  for (int i = 0; i < n; ++i) {
    FeatureVector f(dim);
    for (auto& v : f) v = rng.uniform(-2.0, 2.0);
    b.features.push_back(f);
    b.labels.push_back(static_cast<int>(rng.below(classes)));
  }
  return b;
}

}  // namespace

TEST_CASE("zero weights give ln 2 loss per sample and a uniform prediction") {
  const RefModel m = RefModel::zeros({"authentic", "sdxl"}, 3);
  LabeledFeatures b;
  b.features = {{1, 2, 3}, {-1, 0, 4}};
  b.labels = {0, 1};
  CHECK(loss_and_gradient(m, b).loss == doctest::Approx(std::log(2.0)));
  const auto p = predict(m, {5, 5, 5});
  CHECK(p.probabilities[0] == doctest::Approx(0.5));
  CHECK(p.probabilities[1] == doctest::Approx(0.5));
}

TEST_CASE("analytic gradient matches central finite differences") {
  CounterRng rng(31, 0);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int classes = 2 + static_cast<int>(rng.below(5));
    const int dim = 1 + static_cast<int>(rng.below(20));
    RefModel m = random_model(rng, classes, dim);
    const LabeledFeatures batch = random_batch(rng, 1 + static_cast<int>(rng.below(16)), classes, dim);
    const auto g = loss_and_gradient(m, batch).gradient;
    REQUIRE(g.size() == m.weights.size() + m.bias.size());
    const double eps = 1e-5;
    for (std::size_t i = 0; i < g.size(); ++i) {
      double& param = i < m.weights.size() ? m.weights[i] : m.bias[i - m.weights.size()];
      const double saved = param;
      param = saved + eps;
      const double up = loss_and_gradient(m, batch).loss;
      param = saved - eps;
      const double down = loss_and_gradient(m, batch).loss;
      param = saved;
      const double numeric = (up - down) / (2 * eps);
      const double rel = std::abs(numeric - g[i]) / std::max({std::abs(numeric), std::abs(g[i]), 1e-6});
      worst = std::max(worst, rel);
    }
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("loss is a mean: duplicating the batch leaves it unchanged") {
  CounterRng rng(8, 0);
  const RefModel m = random_model(rng, 3, 5);
  LabeledFeatures b = random_batch(rng, 7, 3, 5);
  const double single = loss_and_gradient(m, b).loss;
  LabeledFeatures twice = b;
  twice.features.insert(twice.features.end(), b.features.begin(), b.features.end());
  twice.labels.insert(twice.labels.end(), b.labels.begin(), b.labels.end());
  CHECK(loss_and_gradient(m, twice).loss == doctest::Approx(single).epsilon(1e-12));
}

TEST_CASE("predict sums to one, saturates, and shifts like softmax") {
  CounterRng rng(12, 0);
  for (int i = 0; i < 50; ++i) {
    const RefModel m = random_model(rng, 4, 6);
    FeatureVector f(6);
    for (auto& v : f) v = rng.uniform(-3, 3);
    const auto p = predict(m, f);
    CHECK(std::accumulate(p.probabilities.begin(), p.probabilities.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-6));
  }
  const auto s = softmax({0.0, 50.0, 1.0});
  CHECK(s.argmax() == 1);
  CHECK(s.probabilities[1] == doctest::Approx(1.0));
  // Adding delta to one logit multiplies its odds against every other class by e^delta.
  const auto a = softmax({0.3, -1.2, 0.8});
  const auto b = softmax({0.3 + 0.7, -1.2, 0.8});
  CHECK(b.probabilities[0] / b.probabilities[2] == doctest::Approx(std::exp(0.7) * a.probabilities[0] / a.probabilities[2]));
  const RefModel m = RefModel::zeros({"authentic", "x"}, 3);
  CHECK_THROWS_AS(predict(m, {1, 2}), Error);
}

TEST_CASE("early stopping with patience 2 halts after two non-improving epochs") {
  EarlyStopping acc(Monitor::kValidationAccuracy, 2);
  const double seq[] = {0.50, 0.60, 0.70, 0.65, 0.64, 0.99};
  int stopped_at = -1;
  for (int e = 0; e < 6; ++e) {
    if (acc.update(seq[e])) {
      stopped_at = e;
      break;
    }
  }
  CHECK(stopped_at == 4);
  CHECK(acc.best_epoch() == 2);
  CHECK(acc.best_value() == 0.70);

  // Equal values are not improvements; loss monitoring minimizes.
  EarlyStopping loss(Monitor::kValidationLoss, 2);
  CHECK_FALSE(loss.update(1.0));
  CHECK_FALSE(loss.update(0.8));
  CHECK_FALSE(loss.update(0.8));
  CHECK_FALSE(loss.update(0.7));
  CHECK_FALSE(loss.update(0.7));
  CHECK(loss.update(0.75));
  CHECK(loss.best_epoch() == 3);

  // Recovery resets the patience counter.
  EarlyStopping r(Monitor::kValidationAccuracy, 2);
  for (double v : {0.5, 0.4, 0.6, 0.5}) CHECK_FALSE(r.update(v));
  CHECK(r.update(0.5));
}

TEST_CASE("separable data reaches 100% train accuracy within 20 epochs") {
  const LabeledFeatures train_set = testing::separable_features(1, 200, 20);
  const LabeledFeatures val_set = testing::separable_features(2, 60, 20);
  TrainConfig cfg;
  cfg.seed = 3;
  const TrainResult r = train(train_set, val_set, {"authentic", "synthetic"}, cfg);
  CHECK(r.report.epochs.size() <= 20);
  CHECK(evaluate_set(r.model, train_set).accuracy == 1.0);
}

TEST_CASE("training returns the best-epoch weights and is deterministic") {
  CounterRng rng(5, 5);
  const LabeledFeatures tr = random_batch(rng, 120, 3, 8);
  const LabeledFeatures va = random_batch(rng, 40, 3, 8);
  TrainConfig cfg;
  cfg.seed = 99;
  cfg.monitor = Monitor::kValidationLoss;
  const TrainResult a = train(tr, va, {"authentic", "a", "b"}, cfg);
  const TrainResult b = train(tr, va, {"authentic", "a", "b"}, cfg);
  CHECK(a.report.to_json().dump() == b.report.to_json().dump());
  CHECK(a.model.to_json().dump() == b.model.to_json().dump());
  const auto& best = a.report.epochs[a.report.best_epoch];
  CHECK(evaluate_set(a.model, va).loss == doctest::Approx(best.val_loss).epsilon(1e-12));
  for (std::size_t e = 0; e + 1 < a.report.epochs.size(); ++e) CHECK(a.report.epochs[e].epoch == int(e));

  cfg.max_epochs = 1;
  CHECK(train(tr, va, {"authentic", "a", "b"}, cfg).report.epochs.size() == 1);
}

TEST_CASE("an empty training class is a degenerate-class error") {
  LabeledFeatures tr;
  tr.features = {{1.0}, {2.0}};
  tr.labels = {0, 0};
  try {
    train(tr, tr, {"authentic", "sdxl"}, TrainConfig{});
    FAIL("trained with an empty class");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kDegenerateClass);
  }
}

TEST_CASE("model JSON round trip and version check") {
  CounterRng rng(1, 9);
  const RefModel m = random_model(rng, 3, 4);
  const RefModel back = RefModel::from_json(m.to_json());
  CHECK(back.weights == m.weights);
  CHECK(back.bias == m.bias);
  CHECK(back.label_space == m.label_space);
  CHECK(back.norm_scale == m.norm_scale);
  auto doc = m.to_json();
  doc["version"] = 99;
  try {
    RefModel::from_json(doc);
    FAIL("unknown version accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kVersion);
  }
  testing::TempDir dir;
  m.save(dir / "m.json");
  CHECK(RefModel::load(dir / "m.json").weights == m.weights);
}
