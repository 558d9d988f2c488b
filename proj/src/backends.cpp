#include "sid/backends.hpp"

#include <cmath>
#include <fstream>
#include <mutex>
#include <numeric>

#include <opencv2/dnn.hpp>

#include "sid/errors.hpp"
#include "sid/features.hpp"
#include "sid/imageops.hpp"

namespace sid {

std::string_view backend_kind_name(BackendKind kind) {
  switch (kind) {
    case BackendKind::kReference: return "reference";
    case BackendKind::kExternal: return "external";
    case BackendKind::kStub: return "stub";
  }
  return "unknown";
}

void validate_label_space(const LabelSpace& labels) {
  bool has_authentic = false;
  for (const auto& l : labels) has_authentic |= (l == kAuthenticLabel);
  if (!has_authentic || labels.size() < 2) {
    fail(ErrorKind::kContractViolation,
         "label space must contain 'authentic' and at least one synthetic class");
  }
}

namespace {

void check_distribution(const std::vector<double>& p, std::size_t classes, const char* what) {
  if (p.size() != classes) {
    fail(ErrorKind::kContractViolation, std::string(what) + " has " + std::to_string(p.size()) +
                                            " entries but the label space has " +
                                            std::to_string(classes));
  }
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0 && v <= 1.0)) {
      fail(ErrorKind::kContractViolation, std::string(what) + " has an entry outside [0, 1]");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    fail(ErrorKind::kContractViolation, std::string(what) + " does not sum to 1");
  }
}

class ReferenceBackend final : public Backend {
 public:
  explicit ReferenceBackend(RefModel model) : model_(std::move(model)) {
    model_.validate();
    if (model_.dim != kFeatureDim) {
      fail(ErrorKind::kContractViolation, "reference model expects D = " + std::to_string(model_.dim) +
                                              ", feature extractor produces " +
                                              std::to_string(kFeatureDim));
    }
  }
  BackendKind kind() const override { return BackendKind::kReference; }
  const LabelSpace& label_space() const override { return model_.label_space; }
  std::optional<int> input_side() const override { return std::nullopt; }
  PredictionDistribution classify(const Patch& patch) const override {
    return predict(model_, extract_features(patch));
  }

 private:
  RefModel model_;
};

class StubBackend final : public Backend {
 public:
  StubBackend(LabelSpace labels, StubScript script)
      : labels_(std::move(labels)), script_(std::move(script)) {
    const std::size_t c = labels_.size();
    check_distribution(script_.default_probabilities, c, "stub default distribution");
    for (const auto& r : script_.rules) check_distribution(r.probabilities, c, "stub rule distribution");
    if (script_.luma_rule) {
      check_distribution(script_.luma_rule->above, c, "stub luma rule (above)");
      check_distribution(script_.luma_rule->below, c, "stub luma rule (below)");
    }
  }
  BackendKind kind() const override { return BackendKind::kStub; }
  const LabelSpace& label_space() const override { return labels_; }
  std::optional<int> input_side() const override { return std::nullopt; }

  PredictionDistribution classify(const Patch& patch) const override {
    for (const auto& rule : script_.rules) {
      if (rule.source && !source_matches(*rule.source, patch.source_id)) continue;
      if (rule.origin && ((*rule.origin)[0] != patch.origin_x || (*rule.origin)[1] != patch.origin_y)) {
        continue;
      }
      if (rule.patch_side && *rule.patch_side != patch.side()) continue;
      return {rule.probabilities};
    }
    if (script_.luma_rule) {
      const GrayImage g = to_grayscale(patch.pixels);
      const double sum = std::accumulate(g.data().begin(), g.data().end(), 0.0);
      const double mean = sum / static_cast<double>(g.data().size());
      return {mean > script_.luma_rule->threshold ? script_.luma_rule->above
                                                  : script_.luma_rule->below};
    }
    return {script_.default_probabilities};
  }

 private:
  static bool source_matches(const std::string& pattern, const std::string& id) {
    if (pattern == id) return true;
    return id.size() > pattern.size() && id.compare(id.size() - pattern.size(), pattern.size(), pattern) == 0 &&
           id[id.size() - pattern.size() - 1] == '/';
  }

  LabelSpace labels_;
  StubScript script_;
};

class ExternalBackend final : public Backend {
 public:
  ExternalBackend(const std::filesystem::path& path, LabelSpace labels, InputSpec spec)
      : labels_(std::move(labels)), spec_(spec) {
    if (!std::filesystem::exists(path)) {
      fail(ErrorKind::kLoad, "external model not found: " + path.string());
    }
    if (spec_.channels != 3 || spec_.height < 1 || spec_.width < 1 || spec_.height != spec_.width) {
      fail(ErrorKind::kParameter, "external input spec must be 3 x S x S");
    }
    for (double s : spec_.scale) {
      if (!(s > 0.0)) fail(ErrorKind::kParameter, "input normalization scales must be positive");
    }
    try {
      net_ = cv::dnn::readNetFromONNX(path.string());
    } catch (const cv::Exception& e) {
      fail(ErrorKind::kLoad, "cannot load external model " + path.string() + ": " + e.what());
    }
    if (net_.empty()) fail(ErrorKind::kLoad, "external model is empty: " + path.string());
  }

  BackendKind kind() const override { return BackendKind::kExternal; }
  const LabelSpace& label_space() const override { return labels_; }
  std::optional<int> input_side() const override { return spec_.width; }

  PredictionDistribution classify(const Patch& patch) const override {
    const int side = spec_.width;
    if (patch.pixels.width() != side || patch.pixels.height() != side) {
      fail(ErrorKind::kContractViolation, "patch side " + std::to_string(patch.side()) +
                                              " does not match model input " + std::to_string(side));
    }
    const int dims[] = {1, 3, side, side};
    cv::Mat blob(4, dims, CV_32F);
    float* data = blob.ptr<float>();
    const std::size_t plane = static_cast<std::size_t>(side) * side;
    for (int c = 0; c < 3; ++c) {
      const int src_c = spec_.bgr ? 2 - c : c;
      for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) {
          const double v = (patch.pixels.at(x, y, src_c) / 255.0 - spec_.mean[c]) / spec_.scale[c];
          data[c * plane + static_cast<std::size_t>(y) * side + x] = static_cast<float>(v);
        }
      }
    }
    std::vector<double> out;
    {
      // cv::dnn::Net keeps per-call state; serialize access to the one net.
      std::lock_guard<std::mutex> lock(mutex_);
      try {
        net_.setInput(blob);
        cv::Mat result = net_.forward();
        const float* r = result.ptr<float>();
        out.assign(r, r + result.total());
      } catch (const cv::Exception& e) {
        fail(ErrorKind::kLoad, std::string("external model inference failed: ") + e.what());
      }
    }
    if (out.size() != labels_.size()) {
      fail(ErrorKind::kContractViolation, "external model emits " + std::to_string(out.size()) +
                                              " classes, label space has " +
                                              std::to_string(labels_.size()));
    }
    bool as_probabilities = spec_.activation == OutputActivation::kProbabilities;
    if (spec_.activation == OutputActivation::kAuto) {
      double sum = 0.0;
      bool nonneg = true;
      for (double v : out) {
        sum += v;
        nonneg &= v >= 0.0;
      }
      as_probabilities = nonneg && std::abs(sum - 1.0) <= 1e-3;
    }
    if (!as_probabilities) return softmax(out);
    double sum = std::accumulate(out.begin(), out.end(), 0.0);
    for (auto& v : out) v /= sum;
    return {out};
  }

 private:
  LabelSpace labels_;
  InputSpec spec_;
  mutable cv::dnn::Net net_;
  mutable std::mutex mutex_;
};

std::vector<double> probs_from(const nlohmann::json& j) { return j.get<std::vector<double>>(); }

OutputActivation parse_activation(const std::string& s) {
  if (s == "auto") return OutputActivation::kAuto;
  if (s == "logits") return OutputActivation::kLogits;
  if (s == "probabilities") return OutputActivation::kProbabilities;
  fail(ErrorKind::kParameter, "unknown output activation '" + s + "'");
}

std::string_view activation_name(OutputActivation a) {
  switch (a) {
    case OutputActivation::kAuto: return "auto";
    case OutputActivation::kLogits: return "logits";
    case OutputActivation::kProbabilities: return "probabilities";
  }
  return "auto";
}

}  // namespace

BackendDescriptor BackendDescriptor::from_json(const nlohmann::json& doc,
                                               const std::filesystem::path& base_dir) {
  BackendDescriptor d;
  try {
    if (doc.contains("version") && doc.at("version") != kFormatVersion) {
      fail(ErrorKind::kVersion, "unsupported backend descriptor version " + doc.at("version").dump());
    }
    const std::string kind = doc.at("kind").get<std::string>();
    if (kind == "reference") {
      d.kind = BackendKind::kReference;
    } else if (kind == "external") {
      d.kind = BackendKind::kExternal;
    } else if (kind == "stub") {
      d.kind = BackendKind::kStub;
    } else {
      fail(ErrorKind::kParameter, "unknown backend kind '" + kind + "'");
    }
    d.id = doc.value("id", kind);
    if (doc.contains("model_path")) {
      std::filesystem::path p = doc.at("model_path").get<std::string>();
      d.model_path = (p.is_relative() && !base_dir.empty()) ? base_dir / p : p;
    }
    if (doc.contains("label_space")) d.label_space = doc.at("label_space").get<LabelSpace>();
    if (doc.contains("input_spec")) {
      const auto& s = doc.at("input_spec");
      d.input_spec.channels = s.value("channels", 3);
      d.input_spec.height = s.value("height", 224);
      d.input_spec.width = s.value("width", 224);
      if (s.contains("mean")) d.input_spec.mean = s.at("mean").get<std::array<double, 3>>();
      if (s.contains("scale")) d.input_spec.scale = s.at("scale").get<std::array<double, 3>>();
      const std::string order = s.value("channel_order", "RGB");
      if (order != "RGB" && order != "BGR") fail(ErrorKind::kParameter, "channel_order must be RGB or BGR");
      d.input_spec.bgr = order == "BGR";
      d.input_spec.activation = parse_activation(s.value("output", "auto"));
    }
    if (doc.contains("script")) {
      const auto& s = doc.at("script");
      d.stub.default_probabilities = probs_from(s.at("default"));
      for (const auto& r : s.value("rules", nlohmann::json::array())) {
        StubRule rule;
        if (r.contains("source")) rule.source = r.at("source").get<std::string>();
        if (r.contains("origin")) rule.origin = r.at("origin").get<std::array<int, 2>>();
        if (r.contains("patch_side")) rule.patch_side = r.at("patch_side").get<int>();
        rule.probabilities = probs_from(r.at("probabilities"));
        d.stub.rules.push_back(std::move(rule));
      }
      if (s.contains("luma_rule")) {
        const auto& l = s.at("luma_rule");
        d.stub.luma_rule = StubScript::LumaRule{l.value("threshold", 127.5), probs_from(l.at("above")),
                                                probs_from(l.at("below"))};
      }
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kValidation, std::string("malformed backend descriptor: ") + e.what());
  }
  return d;
}

BackendDescriptor BackendDescriptor::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kLoad, "cannot open backend descriptor " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kLoad, path.string() + ": " + e.what());
  }
  return from_json(doc, path.parent_path());
}

nlohmann::json BackendDescriptor::to_json() const {
  nlohmann::json j = {{"version", kFormatVersion}, {"kind", backend_kind_name(kind)}, {"id", id}};
  if (!model_path.empty()) j["model_path"] = model_path.string();
  if (!label_space.empty()) j["label_space"] = label_space;
  if (kind == BackendKind::kExternal) {
    j["input_spec"] = {{"channels", input_spec.channels},
                       {"height", input_spec.height},
                       {"width", input_spec.width},
                       {"mean", input_spec.mean},
                       {"scale", input_spec.scale},
                       {"channel_order", input_spec.bgr ? "BGR" : "RGB"},
                       {"output", activation_name(input_spec.activation)}};
  }
  if (kind == BackendKind::kStub) {
    nlohmann::json rules = nlohmann::json::array();
    for (const auto& r : stub.rules) {
      nlohmann::json rj = {{"probabilities", r.probabilities}};
      if (r.source) rj["source"] = *r.source;
      if (r.origin) rj["origin"] = *r.origin;
      if (r.patch_side) rj["patch_side"] = *r.patch_side;
      rules.push_back(rj);
    }
    j["script"] = {{"default", stub.default_probabilities}, {"rules", rules}};
    if (stub.luma_rule) {
      j["script"]["luma_rule"] = {{"threshold", stub.luma_rule->threshold},
                                  {"above", stub.luma_rule->above},
                                  {"below", stub.luma_rule->below}};
    }
  }
  return j;
}

BackendHandle make_reference_backend(RefModel model, std::string id) {
  validate_label_space(model.label_space);
  auto b = std::make_shared<ReferenceBackend>(std::move(model));
  b->set_id(std::move(id));
  return b;
}

BackendHandle make_stub_backend(LabelSpace labels, StubScript script, std::string id) {
  validate_label_space(labels);
  auto b = std::make_shared<StubBackend>(std::move(labels), std::move(script));
  b->set_id(std::move(id));
  return b;
}

BackendHandle load_backend(const BackendDescriptor& desc) {
  const std::string id = desc.id.empty() ? std::string(backend_kind_name(desc.kind)) : desc.id;
  switch (desc.kind) {
    case BackendKind::kReference: {
      if (!std::filesystem::exists(desc.model_path)) {
        fail(ErrorKind::kLoad, "reference model not found: " + desc.model_path.string());
      }
      RefModel model = RefModel::load(desc.model_path);
      if (!desc.label_space.empty() && desc.label_space != model.label_space) {
        fail(ErrorKind::kContractViolation, "descriptor label space disagrees with the model file");
      }
      return make_reference_backend(std::move(model), id);
    }
    case BackendKind::kExternal: {
      validate_label_space(desc.label_space);
      auto b = std::make_shared<ExternalBackend>(desc.model_path, desc.label_space, desc.input_spec);
      b->set_id(id);
      return b;
    }
    case BackendKind::kStub:
      return make_stub_backend(desc.label_space, desc.stub, id);
  }
  fail(ErrorKind::kParameter, "unknown backend kind");
}

PredictionDistribution classify_patch(const Backend& backend, const Patch& patch) {
  if (auto side = backend.input_side(); side && (patch.pixels.width() != *side || patch.pixels.height() != *side)) {
    fail(ErrorKind::kContractViolation, "patch side " + std::to_string(patch.side()) +
                                            " does not match backend input " + std::to_string(*side));
  }
  return backend.classify(patch);
}

}  // namespace sid
