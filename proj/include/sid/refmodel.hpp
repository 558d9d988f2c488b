#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

#include "sid/features.hpp"

namespace sid {

using LabelSpace = std::vector<std::string>;

inline constexpr std::string_view kAuthenticLabel = "authentic";

/// Per-class probabilities aligned with a label space.
struct PredictionDistribution {
  std::vector<double> probabilities;

  std::size_t argmax() const;
};

/// Multinomial logistic classifier over z-scored features.
struct RefModel {
  static constexpr int kFormatVersion = 1;

  LabelSpace label_space;
  int dim = 0;
  std::vector<double> weights;  // C x D, row-major
  std::vector<double> bias;     // C
  std::vector<double> norm_mean;
  std::vector<double> norm_scale;

  std::size_t classes() const noexcept { return label_space.size(); }

  /// Zero weights and identity normalization.
  static RefModel zeros(LabelSpace labels, int dim);

  /// Throws a parameter error when the shapes are inconsistent, C < 2 or a
  /// normalization scale is not positive.
  void validate() const;

  nlohmann::json to_json() const;
  static RefModel from_json(const nlohmann::json& doc);
  void save(const std::filesystem::path& path) const;
  static RefModel load(const std::filesystem::path& path);
};

struct LabeledFeatures {
  std::vector<FeatureVector> features;
  std::vector<int> labels;

  std::size_t size() const noexcept { return labels.size(); }
};

/// Mean softmax cross-entropy and its exact gradient. Features are normalized
/// with the model's own statistics first. The gradient is laid out as the
/// C x D weight block followed by the C biases.
struct LossGradient {
  double loss = 0.0;
  std::vector<double> gradient;
};

LossGradient loss_and_gradient(const RefModel& model, const LabeledFeatures& batch);

/// softmax(W * normalize(fv) + b)
PredictionDistribution predict(const RefModel& model, const FeatureVector& fv);

std::vector<double> logits(const RefModel& model, const FeatureVector& fv);

PredictionDistribution softmax(const std::vector<double>& logits);

// ------------------------------------------------------------------ training

enum class Monitor { kValidationAccuracy, kValidationLoss };

std::string_view monitor_name(Monitor m);

struct TrainConfig {
  int max_epochs = 20;
  int patience = 2;
  Monitor monitor = Monitor::kValidationAccuracy;
  double learning_rate = 0.1;
  int batch_size = 32;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Tracks the monitored value and decides when to stop. Equal values count
/// as no improvement.
class EarlyStopping {
 public:
  EarlyStopping(Monitor monitor, int patience);

  /// Feeds one epoch's value. Returns true when training must stop now.
  bool update(double value);

  int best_epoch() const noexcept { return best_epoch_; }
  double best_value() const noexcept { return best_; }
  bool last_improved() const noexcept { return last_improved_; }

 private:
  Monitor monitor_;
  int patience_;
  int epoch_ = -1;
  int best_epoch_ = -1;
  double best_ = 0.0;
  int stale_ = 0;
  bool last_improved_ = false;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
  bool improved = false;
};

struct TrainReport {
  Monitor monitor = Monitor::kValidationAccuracy;
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  bool stopped_early = false;

  nlohmann::json to_json() const;
};

struct TrainResult {
  RefModel model;
  TrainReport report;
};

/// Produces the training features for a given epoch; lets callers re-augment
/// images every epoch. Labels must index into the label space.
using TrainingFeed = std::function<LabeledFeatures(int epoch)>;

TrainResult train(const LabeledFeatures& train_set, const LabeledFeatures& val_set,
                  const LabelSpace& labels, const TrainConfig& cfg);

/// Feature normalization is fit on the epoch-0 features.
TrainResult train(const TrainingFeed& feed, const LabeledFeatures& val_set,
                  const LabelSpace& labels, const TrainConfig& cfg);

/// Accuracy and mean cross-entropy of a model on a labeled set.
struct SetMetrics {
  double accuracy = 0.0;
  double loss = 0.0;
};
SetMetrics evaluate_set(const RefModel& model, const LabeledFeatures& set);

}  // namespace sid
