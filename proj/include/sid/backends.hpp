#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "sid/image.hpp"
#include "sid/refmodel.hpp"

namespace sid {

enum class BackendKind { kReference, kExternal, kStub };

std::string_view backend_kind_name(BackendKind kind);

/// How an external model's outputs are turned into probabilities.
enum class OutputActivation {
  kAuto,           // probabilities if they already sum to 1 within 1e-3
  kLogits,         // always softmax
  kProbabilities,  // taken as-is
};

/// Tensor layout expected by an external model: NCHW float32.
struct InputSpec {
  int channels = 3;
  int height = 224;
  int width = 224;
  // value = (pixel / 255 - mean[c]) / scale[c], c in model channel order
  std::array<double, 3> mean = {0.0, 0.0, 0.0};
  std::array<double, 3> scale = {1.0, 1.0, 1.0};
  bool bgr = false;
  OutputActivation activation = OutputActivation::kAuto;
};

/// One scripted answer of a stub backend. A rule matches a patch when every
/// populated field matches; the first matching rule wins.
struct StubRule {
  std::optional<std::string> source;  // exact id, or a path suffix after '/'
  std::optional<std::array<int, 2>> origin;
  std::optional<int> patch_side;
  std::vector<double> probabilities;
};

struct StubScript {
  std::vector<double> default_probabilities;
  std::vector<StubRule> rules;
  // Optional brightness rule evaluated before the default: patches whose
  // mean luma is above the threshold get `above`, the rest get `below`.
  struct LumaRule {
    double threshold = 127.5;
    std::vector<double> above;
    std::vector<double> below;
  };
  std::optional<LumaRule> luma_rule;
};

struct BackendDescriptor {
  static constexpr int kFormatVersion = 1;

  BackendKind kind = BackendKind::kStub;
  std::filesystem::path model_path;
  LabelSpace label_space;  // reference models take theirs from the model file
  InputSpec input_spec;    // external only
  StubScript stub;         // stub only
  std::string id;          // free-form name echoed in reports

  /// Parses the descriptor document; relative model paths are resolved
  /// against base_dir.
  static BackendDescriptor from_json(const nlohmann::json& doc,
                                     const std::filesystem::path& base_dir = {});
  static BackendDescriptor load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

/// Read-only classifier handle. classify() is safe to call concurrently.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual BackendKind kind() const = 0;
  virtual const LabelSpace& label_space() const = 0;
  /// Required patch side, or nullopt when any side is accepted.
  virtual std::optional<int> input_side() const = 0;
  virtual PredictionDistribution classify(const Patch& patch) const = 0;

  const std::string& id() const { return id_; }
  void set_id(std::string id) { id_ = std::move(id); }

 private:
  std::string id_;
};

using BackendHandle = std::shared_ptr<const Backend>;

/// Throws a load error for missing or corrupt files, a version error for an
/// unknown format version, and a contract violation when the label space
/// lacks "authentic" or a synthetic class, or disagrees with the model.
BackendHandle load_backend(const BackendDescriptor& desc);

/// Same contract as Backend::classify; returned distributions lie on the
/// probability simplex.
PredictionDistribution classify_patch(const Backend& backend, const Patch& patch);

/// Reference backend over an in-memory model.
BackendHandle make_reference_backend(RefModel model, std::string id = "reference");

/// Stub backend over an in-memory script.
BackendHandle make_stub_backend(LabelSpace labels, StubScript script, std::string id = "stub");

/// Checks that the label space holds "authentic" plus at least one other class.
void validate_label_space(const LabelSpace& labels);

}  // namespace sid
