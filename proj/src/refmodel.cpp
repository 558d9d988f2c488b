#include "sid/refmodel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "sid/errors.hpp"
#include "sid/random.hpp"

namespace sid {

std::size_t PredictionDistribution::argmax() const {
  return static_cast<std::size_t>(
      std::max_element(probabilities.begin(), probabilities.end()) - probabilities.begin());
}

RefModel RefModel::zeros(LabelSpace labels, int dim) {
  RefModel m;
  m.label_space = std::move(labels);
  m.dim = dim;
  m.weights.assign(m.label_space.size() * static_cast<std::size_t>(dim), 0.0);
  m.bias.assign(m.label_space.size(), 0.0);
  m.norm_mean.assign(dim, 0.0);
  m.norm_scale.assign(dim, 1.0);
  return m;
}

void RefModel::validate() const {
  const std::size_t c = classes();
  if (c < 2) fail(ErrorKind::kParameter, "model needs at least two classes");
  if (dim < 1) fail(ErrorKind::kParameter, "model feature dimension must be positive");
  const auto d = static_cast<std::size_t>(dim);
  if (weights.size() != c * d || bias.size() != c || norm_mean.size() != d ||
      norm_scale.size() != d) {
    fail(ErrorKind::kParameter, "model parameter shapes are inconsistent");
  }
  for (double s : norm_scale) {
    if (!(s > 0.0)) fail(ErrorKind::kParameter, "normalization scales must be positive");
  }
}

nlohmann::json RefModel::to_json() const {
  nlohmann::json w = nlohmann::json::array();
  for (std::size_t k = 0; k < classes(); ++k) {
    w.push_back(std::vector<double>(weights.begin() + static_cast<std::ptrdiff_t>(k * dim),
                                    weights.begin() + static_cast<std::ptrdiff_t>((k + 1) * dim)));
  }
  return {
      {"version", kFormatVersion},
      {"label_space", label_space},
      {"D", dim},
      {"weights", w},
      {"bias", bias},
      {"normalization", {{"mean", norm_mean}, {"scale", norm_scale}}},
  };
}

RefModel RefModel::from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("version")) {
    fail(ErrorKind::kLoad, "reference model document has no version field");
  }
  if (doc.at("version") != kFormatVersion) {
    fail(ErrorKind::kVersion, "unsupported reference model version " + doc.at("version").dump());
  }
  RefModel m;
  try {
    m.label_space = doc.at("label_space").get<LabelSpace>();
    m.dim = doc.at("D").get<int>();
    for (const auto& row : doc.at("weights")) {
      const auto r = row.get<std::vector<double>>();
      if (static_cast<int>(r.size()) != m.dim) fail(ErrorKind::kLoad, "weight row length != D");
      m.weights.insert(m.weights.end(), r.begin(), r.end());
    }
    m.bias = doc.at("bias").get<std::vector<double>>();
    m.norm_mean = doc.at("normalization").at("mean").get<std::vector<double>>();
    m.norm_scale = doc.at("normalization").at("scale").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kLoad, std::string("malformed reference model: ") + e.what());
  }
  try {
    m.validate();
  } catch (const Error& e) {
    fail(ErrorKind::kLoad, std::string("invalid reference model: ") + e.what());
  }
  return m;
}

void RefModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
  out << to_json().dump(2) << "\n";
}

RefModel RefModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kLoad, "cannot open reference model " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kLoad, path.string() + ": " + e.what());
  }
  return from_json(doc);
}

PredictionDistribution softmax(const std::vector<double>& z) {
  PredictionDistribution out;
  out.probabilities.resize(z.size());
  const double mx = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    out.probabilities[k] = std::exp(z[k] - mx);
    sum += out.probabilities[k];
  }
  for (auto& p : out.probabilities) p /= sum;
  return out;
}

namespace {

// Raw (already normalized) feature rows and their logits.
void logits_into(const RefModel& m, const double* z, double* out) {
  const auto d = static_cast<std::size_t>(m.dim);
  for (std::size_t k = 0; k < m.classes(); ++k) {
    const double* w = m.weights.data() + k * d;
    double acc = m.bias[k];
    for (std::size_t j = 0; j < d; ++j) acc += w[j] * z[j];
    out[k] = acc;
  }
}

std::vector<double> normalize(const RefModel& m, const FeatureVector& fv) {
  if (static_cast<int>(fv.size()) != m.dim) {
    fail(ErrorKind::kParameter, "feature vector has length " + std::to_string(fv.size()) +
                                    ", model expects " + std::to_string(m.dim));
  }
  std::vector<double> z(fv.size());
  for (std::size_t j = 0; j < fv.size(); ++j) z[j] = (fv[j] - m.norm_mean[j]) / m.norm_scale[j];
  return z;
}

struct NormalizedSet {
  std::vector<double> rows;  // N x D
  std::vector<int> labels;
  std::size_t dim = 0;

  const double* row(std::size_t i) const { return rows.data() + i * dim; }
  std::size_t size() const { return labels.size(); }
};

NormalizedSet normalize_set(const RefModel& m, const LabeledFeatures& set) {
  if (set.features.size() != set.labels.size()) {
    fail(ErrorKind::kParameter, "feature and label counts differ");
  }
  NormalizedSet out;
  out.dim = static_cast<std::size_t>(m.dim);
  out.rows.reserve(set.size() * out.dim);
  for (std::size_t i = 0; i < set.size(); ++i) {
    const int y = set.labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= m.classes()) {
      fail(ErrorKind::kParameter, "label index " + std::to_string(y) + " outside label space");
    }
    const auto z = normalize(m, set.features[i]);
    out.rows.insert(out.rows.end(), z.begin(), z.end());
  }
  out.labels = set.labels;
  return out;
}

// Mean cross-entropy over the selected rows; accumulates the gradient when
// grad is non-null.
double loss_over(const RefModel& m, const NormalizedSet& set, const std::size_t* idx,
                 std::size_t n, std::vector<double>* grad) {
  const std::size_t c = m.classes();
  const std::size_t d = set.dim;
  if (grad) grad->assign(c * d + c, 0.0);
  std::vector<double> z(c);
  double loss = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t i = idx ? idx[t] : t;
    const double* x = set.row(i);
    logits_into(m, x, z.data());
    const double mx = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (auto& v : z) {
      v = std::exp(v - mx);
      sum += v;
    }
    const int y = set.labels[i];
    loss += -std::log(z[y] / sum);
    if (grad) {
      for (std::size_t k = 0; k < c; ++k) {
        const double delta = z[k] / sum - (static_cast<int>(k) == y ? 1.0 : 0.0);
        double* gw = grad->data() + k * d;
        for (std::size_t j = 0; j < d; ++j) gw[j] += delta * x[j];
        (*grad)[c * d + k] += delta;
      }
    }
  }
  const double inv = 1.0 / static_cast<double>(n);
  if (grad) {
    for (auto& g : *grad) g *= inv;
  }
  return loss * inv;
}

SetMetrics metrics_over(const RefModel& m, const NormalizedSet& set) {
  SetMetrics out;
  out.loss = loss_over(m, set, nullptr, set.size(), nullptr);
  std::vector<double> z(m.classes());
  std::size_t correct = 0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    logits_into(m, set.row(i), z.data());
    const auto k = static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
    if (k == set.labels[i]) ++correct;
  }
  out.accuracy = static_cast<double>(correct) / static_cast<double>(set.size());
  return out;
}

void fit_normalization(RefModel& m, const LabeledFeatures& set) {
  const auto d = static_cast<std::size_t>(m.dim);
  const double n = static_cast<double>(set.size());
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (const auto& f : set.features) mean += f[j];
    mean /= n;
    double var = 0.0;
    for (const auto& f : set.features) var += (f[j] - mean) * (f[j] - mean);
    const double sd = std::sqrt(var / n);
    m.norm_mean[j] = mean;
    m.norm_scale[j] = sd > 1e-12 ? sd : 1.0;
  }
}

void check_features(const LabeledFeatures& set, std::size_t dim, const char* which) {
  if (set.size() == 0) fail(ErrorKind::kEmptyDataset, std::string(which) + " set is empty");
  if (set.features.size() != set.labels.size()) {
    fail(ErrorKind::kParameter, std::string(which) + " set has mismatched features and labels");
  }
  for (const auto& f : set.features) {
    if (f.size() != dim) fail(ErrorKind::kParameter, std::string(which) + " set has ragged features");
    for (double v : f) {
      if (!std::isfinite(v)) fail(ErrorKind::kParameter, std::string(which) + " set has non-finite features");
    }
  }
}

}  // namespace

std::vector<double> logits(const RefModel& model, const FeatureVector& fv) {
  const auto z = normalize(model, fv);
  std::vector<double> out(model.classes());
  logits_into(model, z.data(), out.data());
  return out;
}

PredictionDistribution predict(const RefModel& model, const FeatureVector& fv) {
  return softmax(logits(model, fv));
}

LossGradient loss_and_gradient(const RefModel& model, const LabeledFeatures& batch) {
  model.validate();
  if (batch.size() == 0) fail(ErrorKind::kParameter, "empty batch");
  const NormalizedSet set = normalize_set(model, batch);
  LossGradient out;
  out.loss = loss_over(model, set, nullptr, set.size(), &out.gradient);
  return out;
}

SetMetrics evaluate_set(const RefModel& model, const LabeledFeatures& set) {
  if (set.size() == 0) fail(ErrorKind::kParameter, "empty evaluation set");
  return metrics_over(model, normalize_set(model, set));
}

std::string_view monitor_name(Monitor m) {
  return m == Monitor::kValidationAccuracy ? "validation_accuracy" : "validation_loss";
}

void TrainConfig::validate() const {
  if (max_epochs < 1) fail(ErrorKind::kParameter, "max_epochs must be at least 1");
  if (patience < 0) fail(ErrorKind::kParameter, "patience must be nonnegative");
  if (!(learning_rate > 0.0)) fail(ErrorKind::kParameter, "learning_rate must be positive");
  if (batch_size < 1) fail(ErrorKind::kParameter, "batch_size must be at least 1");
}

EarlyStopping::EarlyStopping(Monitor monitor, int patience)
    : monitor_(monitor), patience_(patience) {
  if (patience < 0) fail(ErrorKind::kParameter, "patience must be nonnegative");
}

bool EarlyStopping::update(double value) {
  ++epoch_;
  const bool better = best_epoch_ < 0 ||
                      (monitor_ == Monitor::kValidationAccuracy ? value > best_ : value < best_);
  last_improved_ = better;
  if (better) {
    best_ = value;
    best_epoch_ = epoch_;
    stale_ = 0;
    return false;
  }
  ++stale_;
  return stale_ >= patience_;
}

nlohmann::json TrainReport::to_json() const {
  nlohmann::json epochs_json = nlohmann::json::array();
  for (const auto& e : epochs) {
    epochs_json.push_back({{"epoch", e.epoch},
                           {"train_loss", e.train_loss},
                           {"val_loss", e.val_loss},
                           {"val_accuracy", e.val_accuracy},
                           {"improved", e.improved}});
  }
  return {{"monitor", monitor_name(monitor)},
          {"epochs", epochs_json},
          {"best_epoch", best_epoch},
          {"stopped_early", stopped_early}};
}

TrainResult train(const TrainingFeed& feed, const LabeledFeatures& val_set,
                  const LabelSpace& labels, const TrainConfig& cfg) {
  cfg.validate();
  if (labels.size() < 2) fail(ErrorKind::kParameter, "training needs at least two classes");
  LabeledFeatures first = feed(0);
  if (first.size() == 0) fail(ErrorKind::kEmptyDataset, "training set is empty");
  const std::size_t dim = first.features.front().size();
  check_features(first, dim, "training");
  check_features(val_set, dim, "validation");
  std::vector<std::size_t> per_class(labels.size(), 0);
  for (int y : first.labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= labels.size()) {
      fail(ErrorKind::kParameter, "training label outside label space");
    }
    ++per_class[static_cast<std::size_t>(y)];
  }
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (per_class[k] == 0) {
      fail(ErrorKind::kDegenerateClass, "class '" + labels[k] + "' has no training samples");
    }
  }

  RefModel model = RefModel::zeros(labels, static_cast<int>(dim));
  fit_normalization(model, first);
  const NormalizedSet val = normalize_set(model, val_set);

  RefModel best = model;
  TrainReport report;
  report.monitor = cfg.monitor;
  EarlyStopping stopper(cfg.monitor, cfg.patience);
  std::vector<double> grad;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const NormalizedSet data = normalize_set(model, epoch == 0 ? first : feed(epoch));
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    CounterRng rng(cfg.seed, static_cast<std::uint64_t>(epoch), 0x73687566u);
    shuffle_with(order, rng);

    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t n = std::min(order.size() - start, static_cast<std::size_t>(cfg.batch_size));
      loss_over(model, data, order.data() + start, n, &grad);
      const std::size_t cd = model.weights.size();
      for (std::size_t i = 0; i < cd; ++i) model.weights[i] -= cfg.learning_rate * grad[i];
      for (std::size_t k = 0; k < model.bias.size(); ++k) {
        model.bias[k] -= cfg.learning_rate * grad[cd + k];
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_over(model, data, nullptr, data.size(), nullptr);
    const SetMetrics vm = metrics_over(model, val);
    rec.val_loss = vm.loss;
    rec.val_accuracy = vm.accuracy;
    const bool stop = stopper.update(cfg.monitor == Monitor::kValidationAccuracy ? vm.accuracy : vm.loss);
    rec.improved = stopper.last_improved();
    if (rec.improved) best = model;
    report.epochs.push_back(rec);
    if (stop) {
      report.stopped_early = epoch + 1 < cfg.max_epochs;
      break;
    }
  }
  report.best_epoch = stopper.best_epoch();
  return {std::move(best), std::move(report)};
}

TrainResult train(const LabeledFeatures& train_set, const LabeledFeatures& val_set,
                  const LabelSpace& labels, const TrainConfig& cfg) {
  return train([&](int) { return train_set; }, val_set, labels, cfg);
}

}  // namespace sid
