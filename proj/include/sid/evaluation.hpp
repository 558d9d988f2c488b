#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "sid/alterations.hpp"
#include "sid/backends.hpp"
#include "sid/dataset.hpp"
#include "sid/imageops.hpp"

namespace sid {

enum class Verdict { kAuthentic, kSynthetic };

std::string_view verdict_name(Verdict v);

/// Maps a class label onto the binary task: anything but "authentic" is
/// synthetic.
Verdict binary_truth(std::string_view label);

struct BinarizationRule {
  enum class Kind {
    kArgmax,         // synthetic iff the argmax is a non-authentic class
    kSyntheticMass,  // synthetic iff 1 - p(authentic) > threshold
  };
  Kind kind = Kind::kArgmax;
  double threshold = 0.5;
};

/// Argmax over classes; an exact tie between authentic and any synthetic
/// class resolves to authentic.
Verdict binarize_prediction(const PredictionDistribution& dist, const LabelSpace& labels,
                            const BinarizationRule& rule = {});

enum class SelectionMode { kCenter, kTopContrast };

struct VotingPolicy {
  int n_patches = 5;
  int threshold_k = 3;
  BinarizationRule binarization;
  SelectionMode selection = SelectionMode::kTopContrast;
  // With fewer than n_patches candidates the threshold becomes
  // ceil(small_image_fraction * available).
  double small_image_fraction = 0.6;
  // Put the center crop first and fill the rest with top-contrast patches.
  bool include_center = false;
  int stride = 112;

  void validate() const;

  /// 3-of-5 majority voting.
  static VotingPolicy majority() { return {}; }
  /// 5-of-5: every patch must be flagged.
  static VotingPolicy strict() {
    VotingPolicy p;
    p.threshold_k = 5;
    return p;
  }
};

int effective_threshold(const VotingPolicy& policy, int available);

/// Synthetic iff the number of synthetic verdicts reaches the effective
/// threshold. Throws a parameter error for an empty list or more verdicts
/// than n_patches.
Verdict vote(std::span<const Verdict> verdicts, const VotingPolicy& policy);

// ------------------------------------------------------------- confusion

/// Square confusion matrix, rows = truth, columns = prediction.
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(LabelSpace labels);

  const LabelSpace& labels() const noexcept { return labels_; }
  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t index_of(const std::string& label) const;

  void add(std::size_t truth, std::size_t predicted, std::uint64_t n = 1);
  std::uint64_t at(std::size_t truth, std::size_t predicted) const;
  std::uint64_t support(std::size_t truth) const;

  nlohmann::json to_json() const;

 private:
  LabelSpace labels_;
  std::vector<std::uint64_t> counts_;
};

/// Diagonal over support, as a fraction. Throws an undefined-value error when
/// the class has no support.
double recall(const ConfusionMatrix& cm, const std::string& label);

/// Mean recall over classes with nonzero support; throws an undefined-value
/// error when no class has support.
double macro_recall(const ConfusionMatrix& cm);

std::vector<std::string> zero_support_classes(const ConfusionMatrix& cm);

// ------------------------------------------------------------- evaluation

enum class EvalMode { kCenterPatch, kVotedImage, kResized };
enum class Scoring { kBinary, kMulticlass };

std::string_view eval_mode_name(EvalMode m);
std::optional<EvalMode> parse_eval_mode(std::string_view s);
std::string_view scoring_name(Scoring s);

using ImageLoader = std::function<ImageBuffer(const DatasetManifest&, const ManifestRecord&)>;

/// Reads and decodes the record's file.
ImageBuffer load_record_image(const DatasetManifest& m, const ManifestRecord& r);

struct EvalOptions {
  EvalMode mode = EvalMode::kCenterPatch;
  Scoring scoring = Scoring::kBinary;
  VotingPolicy policy;
  int patch_side = kDefaultPatchSide;
  int workers = 1;
  std::string dataset_id;
  // Applied to every image before patching; the manifest index keys the
  // random stream, so altered test sets are reproducible.
  std::optional<AugmentationPolicy> alteration;
  ImageLoader loader = load_record_image;
};

struct ImageOutcome {
  std::string path;
  std::string truth;
  std::string predicted;  // scoring label
  int patches = 0;
  int synthetic_patches = 0;
};

struct SkippedImage {
  std::string path;
  std::string reason;
};

struct EvalReport {
  std::string dataset_id;
  std::string backend_id;
  EvalMode mode = EvalMode::kCenterPatch;
  Scoring scoring = Scoring::kBinary;
  VotingPolicy policy;
  ConfusionMatrix confusion;
  // Rows = manifest labels, columns = confusion labels.
  LabelSpace source_labels;
  std::vector<std::vector<std::uint64_t>> per_source;
  std::vector<ImageOutcome> images;
  std::vector<SkippedImage> skipped;
  double seconds = 0.0;

  /// Percent of correctly scored images for a manifest label. In binary
  /// scoring "correct" means the binary verdict matches the label's binary
  /// truth; in multiclass scoring it means the exact class.
  double class_recall(const std::string& source_label) const;
  std::map<std::string, double> per_class_recall() const;

  nlohmann::json to_json(bool include_images = true, bool include_timing = false) const;
};

EvalReport evaluate_dataset(const Backend& backend, const DatasetManifest& manifest,
                            const EvalOptions& options);

// ------------------------------------------------------------- cross matrix

struct CrossMatrix {
  std::vector<std::string> row_ids;
  std::vector<std::string> col_ids;
  std::vector<std::optional<double>> values;  // row-major, percent
  std::vector<std::optional<double>> row_avg;
  std::vector<std::optional<double>> col_avg;
  std::vector<std::string> missing;  // "row/col: reason"

  std::optional<double> at(std::size_t r, std::size_t c) const { return values[r * col_ids.size() + c]; }

  /// Builds the matrix and its averages over present cells.
  static CrossMatrix from_cells(std::vector<std::string> rows, std::vector<std::string> cols,
                                std::vector<std::optional<double>> cells);

  nlohmann::json to_json() const;
  /// Rows and columns as in the printed tables, with an "Avg." column and row.
  std::string to_csv() const;
};

enum class CrossProtocol {
  kSyntheticRecall,  // binary recall of the synthetic class
  kMacroRecall,      // multiclass macro recall
};

std::string_view cross_protocol_name(CrossProtocol p);

struct CrossRun {
  std::string id;
  BackendHandle backend;
};

struct EvalSet {
  std::string id;
  DatasetManifest manifest;
  std::optional<AugmentationPolicy> alteration;
};

CrossMatrix cross_matrix(const std::vector<CrossRun>& runs, const std::vector<EvalSet>& sets,
                         CrossProtocol protocol, const EvalOptions& base);

// ------------------------------------------------------------- sweep

struct SweepRow {
  int k = 0;
  double authentic_recall = 0.0;  // percent
  double synthetic_recall = 0.0;  // percent
};

struct SweepTable {
  int n_patches = 0;
  std::size_t authentic_images = 0;
  std::size_t synthetic_images = 0;
  std::vector<SweepRow> rows;
  std::vector<SkippedImage> skipped;

  nlohmann::json to_json() const;
  std::string to_csv() const;
};

/// Voted-mode recall of both classes for every threshold k in 1..n.
SweepTable threshold_sweep(const Backend& backend, const DatasetManifest& authentic,
                           const DatasetManifest& synthetic, const EvalOptions& base);

// ------------------------------------------------------------- resize study

struct DeltaEntry {
  std::string dataset_id;
  std::string label;
  double center = 0.0;   // percent
  double resized = 0.0;  // percent
  double delta = 0.0;    // resized - center
};

struct DeltaReport {
  std::vector<DeltaEntry> entries;
  // Mean over entries grouped by binary class ("authentic", "synthetic").
  std::vector<DeltaEntry> averages;

  nlohmann::json to_json() const;
};

/// "+0.21" / "-34.87"; zero renders as "+0.00".
std::string format_signed(double value);

DeltaReport resize_vs_crop_report(const std::vector<EvalReport>& center,
                                  const std::vector<EvalReport>& resized);

inline DeltaReport resize_vs_crop_report(const EvalReport& center, const EvalReport& resized) {
  return resize_vs_crop_report(std::vector<EvalReport>{center}, std::vector<EvalReport>{resized});
}

}  // namespace sid
