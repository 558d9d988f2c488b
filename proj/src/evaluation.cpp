#include "sid/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "parallel.hpp"
#include "sid/errors.hpp"
#include "sid/imageops.hpp"
#include "sid/patches.hpp"

namespace sid {

std::string_view verdict_name(Verdict v) {
  return v == Verdict::kAuthentic ? "authentic" : "synthetic";
}

Verdict binary_truth(std::string_view label) {
  return label == kAuthenticLabel ? Verdict::kAuthentic : Verdict::kSynthetic;
}

Verdict binarize_prediction(const PredictionDistribution& dist, const LabelSpace& labels,
                            const BinarizationRule& rule) {
  const auto& p = dist.probabilities;
  if (p.size() != labels.size() || p.empty()) {
    fail(ErrorKind::kContractViolation, "prediction length does not match the label space");
  }
  const auto auth = std::find(labels.begin(), labels.end(), kAuthenticLabel);
  if (auth == labels.end()) fail(ErrorKind::kContractViolation, "label space has no 'authentic' class");
  const std::size_t a = static_cast<std::size_t>(auth - labels.begin());

  if (rule.kind == BinarizationRule::Kind::kSyntheticMass) {
    return 1.0 - p[a] > rule.threshold ? Verdict::kSynthetic : Verdict::kAuthentic;
  }
  double best_synthetic = -1.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (k != a) best_synthetic = std::max(best_synthetic, p[k]);
  }
  return best_synthetic > p[a] ? Verdict::kSynthetic : Verdict::kAuthentic;
}

void VotingPolicy::validate() const {
  if (n_patches < 1) fail(ErrorKind::kParameter, "n_patches must be at least 1");
  if (threshold_k < 1 || threshold_k > n_patches) {
    fail(ErrorKind::kParameter, "threshold_k must be in [1, n_patches]");
  }
  if (!(small_image_fraction > 0.0 && small_image_fraction <= 1.0)) {
    fail(ErrorKind::kParameter, "small_image_fraction must be in (0, 1]");
  }
  if (stride < 1) fail(ErrorKind::kParameter, "stride must be positive");
}

int effective_threshold(const VotingPolicy& policy, int available) {
  if (available >= policy.n_patches) return policy.threshold_k;
  // Tolerance keeps products like 0.6 * 5 from rounding up past an integer.
  const int t = static_cast<int>(std::ceil(policy.small_image_fraction * available - 1e-9));
  return std::max(1, t);
}

Verdict vote(std::span<const Verdict> verdicts, const VotingPolicy& policy) {
  policy.validate();
  if (verdicts.empty()) fail(ErrorKind::kParameter, "cannot vote on an empty verdict list");
  if (verdicts.size() > static_cast<std::size_t>(policy.n_patches)) {
    fail(ErrorKind::kParameter, "more verdicts than n_patches");
  }
  const auto synthetic = std::count(verdicts.begin(), verdicts.end(), Verdict::kSynthetic);
  return synthetic >= effective_threshold(policy, static_cast<int>(verdicts.size()))
             ? Verdict::kSynthetic
             : Verdict::kAuthentic;
}

// ------------------------------------------------------------- confusion

ConfusionMatrix::ConfusionMatrix(LabelSpace labels)
    : labels_(std::move(labels)), counts_(labels_.size() * labels_.size(), 0) {}

std::size_t ConfusionMatrix::index_of(const std::string& label) const {
  const auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) fail(ErrorKind::kParameter, "label '" + label + "' not in confusion matrix");
  return static_cast<std::size_t>(it - labels_.begin());
}

void ConfusionMatrix::add(std::size_t truth, std::size_t predicted, std::uint64_t n) {
  counts_.at(truth * labels_.size() + predicted) += n;
}

std::uint64_t ConfusionMatrix::at(std::size_t truth, std::size_t predicted) const {
  return counts_.at(truth * labels_.size() + predicted);
}

std::uint64_t ConfusionMatrix::support(std::size_t truth) const {
  std::uint64_t s = 0;
  for (std::size_t j = 0; j < labels_.size(); ++j) s += at(truth, j);
  return s;
}

nlohmann::json ConfusionMatrix::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    std::vector<std::uint64_t> row(counts_.begin() + static_cast<std::ptrdiff_t>(i * labels_.size()),
                                   counts_.begin() + static_cast<std::ptrdiff_t>((i + 1) * labels_.size()));
    rows.push_back(row);
  }
  return {{"labels", labels_}, {"counts", rows}};
}

double recall(const ConfusionMatrix& cm, const std::string& label) {
  const std::size_t i = cm.index_of(label);
  const auto s = cm.support(i);
  if (s == 0) fail(ErrorKind::kUndefinedValue, "recall of '" + label + "' is undefined: zero support");
  return static_cast<double>(cm.at(i, i)) / static_cast<double>(s);
}

double macro_recall(const ConfusionMatrix& cm) {
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < cm.size(); ++i) {
    const auto s = cm.support(i);
    if (s == 0) continue;
    acc += static_cast<double>(cm.at(i, i)) / static_cast<double>(s);
    ++n;
  }
  if (n == 0) fail(ErrorKind::kUndefinedValue, "macro recall is undefined: no class has support");
  return acc / static_cast<double>(n);
}

std::vector<std::string> zero_support_classes(const ConfusionMatrix& cm) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < cm.size(); ++i) {
    if (cm.support(i) == 0) out.push_back(cm.labels()[i]);
  }
  return out;
}

// ------------------------------------------------------------- evaluation

std::string_view eval_mode_name(EvalMode m) {
  switch (m) {
    case EvalMode::kCenterPatch: return "center-patch";
    case EvalMode::kVotedImage: return "voted-image";
    case EvalMode::kResized: return "resized";
  }
  return "center-patch";
}

std::optional<EvalMode> parse_eval_mode(std::string_view s) {
  for (EvalMode m : {EvalMode::kCenterPatch, EvalMode::kVotedImage, EvalMode::kResized}) {
    if (eval_mode_name(m) == s) return m;
  }
  if (s == "center") return EvalMode::kCenterPatch;
  if (s == "voted") return EvalMode::kVotedImage;
  return std::nullopt;
}

std::string_view scoring_name(Scoring s) { return s == Scoring::kBinary ? "binary" : "multiclass"; }

ImageBuffer load_record_image(const DatasetManifest& m, const ManifestRecord& r) {
  return read_image(m.resolve(r));
}

namespace {

struct PatchVotes {
  int available = 0;
  int synthetic = 0;
  std::size_t argmax = 0;  // center/resized only
  Verdict verdict = Verdict::kAuthentic;
};

struct WorkItem {
  std::optional<PatchVotes> votes;
  std::string skip_reason;
};

std::vector<Patch> voting_patches(const ImageBuffer& img, const VotingPolicy& policy, int side,
                                  const std::string& source) {
  if (policy.selection == SelectionMode::kCenter) return {center_crop(img, side, source)};
  PatchGrid grid;
  grid.side = side;
  grid.stride = policy.stride;
  if (!policy.include_center) return select_top_patches(img, policy.n_patches, grid, source);

  std::vector<Patch> out{center_crop(img, side, source)};
  if (out.front().padded) return out;
  for (auto& p : select_top_patches(img, policy.n_patches, grid, source)) {
    if (static_cast<int>(out.size()) >= policy.n_patches) break;
    if (p.origin_x == out.front().origin_x && p.origin_y == out.front().origin_y) continue;
    out.push_back(std::move(p));
  }
  return out;
}

// Classifies one record according to the mode. Decode failures become skips;
// every other error propagates.
WorkItem process_record(const Backend& backend, const DatasetManifest& manifest, std::size_t index,
                        const EvalOptions& opt, int side) {
  const ManifestRecord& rec = manifest.records[index];
  WorkItem item;
  ImageBuffer img;
  try {
    img = opt.loader(manifest, rec);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kDecode || e.kind() == ErrorKind::kUnsupportedFormat ||
        e.kind() == ErrorKind::kIo) {
      item.skip_reason = std::string(error_kind_name(e.kind())) + ": " + e.what();
      return item;
    }
    throw;
  }
  if (opt.alteration) img = augment(img, *opt.alteration, index).image;

  const LabelSpace& labels = backend.label_space();
  PatchVotes votes;
  if (opt.mode == EvalMode::kVotedImage) {
    const auto patches = voting_patches(img, opt.policy, side, rec.path);
    std::vector<Verdict> verdicts;
    verdicts.reserve(patches.size());
    for (const auto& p : patches) {
      verdicts.push_back(binarize_prediction(classify_patch(backend, p), labels, opt.policy.binarization));
    }
    votes.available = static_cast<int>(verdicts.size());
    votes.synthetic = static_cast<int>(std::count(verdicts.begin(), verdicts.end(), Verdict::kSynthetic));
    votes.verdict = vote(verdicts, opt.policy);
  } else {
    Patch p;
    if (opt.mode == EvalMode::kCenterPatch) {
      p = center_crop(img, side, rec.path);
    } else {
      p.pixels = resize_bilinear(img, side, side);
      p.source_id = rec.path;
    }
    const PredictionDistribution dist = classify_patch(backend, p);
    votes.available = 1;
    votes.verdict = binarize_prediction(dist, labels, opt.policy.binarization);
    votes.synthetic = votes.verdict == Verdict::kSynthetic ? 1 : 0;
    votes.argmax = dist.argmax();
  }
  item.votes = votes;
  return item;
}

std::vector<WorkItem> run_items(const Backend& backend, const DatasetManifest& manifest,
                                const EvalOptions& opt) {
  opt.policy.validate();
  const int side = backend.input_side().value_or(opt.patch_side);
  if (side < 1) fail(ErrorKind::kParameter, "patch side must be positive");
  std::vector<WorkItem> items(manifest.records.size());
  detail::parallel_for(items.size(), opt.workers, [&](std::size_t i) {
    items[i] = process_record(backend, manifest, i, opt, side);
  });
  return items;
}

std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

double EvalReport::class_recall(const std::string& source_label) const {
  const auto it = std::find(source_labels.begin(), source_labels.end(), source_label);
  if (it == source_labels.end()) fail(ErrorKind::kParameter, "no class '" + source_label + "' in report");
  const auto& row = per_source[static_cast<std::size_t>(it - source_labels.begin())];
  std::uint64_t support = 0;
  for (auto c : row) support += c;
  if (support == 0) fail(ErrorKind::kUndefinedValue, "class '" + source_label + "' has zero support");
  const std::string target =
      scoring == Scoring::kBinary ? std::string(verdict_name(binary_truth(source_label))) : source_label;
  const std::size_t col = confusion.index_of(target);
  return 100.0 * static_cast<double>(row[col]) / static_cast<double>(support);
}

std::map<std::string, double> EvalReport::per_class_recall() const {
  std::map<std::string, double> out;
  for (std::size_t i = 0; i < source_labels.size(); ++i) {
    std::uint64_t support = 0;
    for (auto c : per_source[i]) support += c;
    if (support > 0) out[source_labels[i]] = class_recall(source_labels[i]);
  }
  return out;
}

nlohmann::json EvalReport::to_json(bool include_images, bool include_timing) const {
  nlohmann::json per_class = nlohmann::json::object();
  for (const auto& [label, r] : per_class_recall()) per_class[label] = r;
  nlohmann::json sources = nlohmann::json::array();
  for (std::size_t i = 0; i < source_labels.size(); ++i) {
    sources.push_back({{"label", source_labels[i]}, {"counts", per_source[i]}});
  }
  nlohmann::json j = {
      {"dataset_id", dataset_id},
      {"backend_id", backend_id},
      {"mode", eval_mode_name(mode)},
      {"scoring", scoring_name(scoring)},
      {"voting_policy",
       {{"n_patches", policy.n_patches},
        {"threshold_k", policy.threshold_k},
        {"selection", policy.selection == SelectionMode::kCenter ? "center" : "top-contrast"},
        {"small_image_fraction", policy.small_image_fraction},
        {"include_center", policy.include_center},
        {"stride", policy.stride},
        {"binarization",
         {{"rule", policy.binarization.kind == BinarizationRule::Kind::kArgmax ? "argmax" : "synthetic_mass"},
          {"threshold", policy.binarization.threshold}}}}},
      {"confusion", confusion.to_json()},
      {"per_source", {{"columns", confusion.labels()}, {"rows", sources}}},
      {"per_class_recall", per_class},
      {"zero_support_classes", zero_support_classes(confusion)},
      {"evaluated", images.size()},
      {"skipped", nlohmann::json::array()},
  };
  try {
    j["macro_recall"] = 100.0 * macro_recall(confusion);
  } catch (const Error&) {
    j["macro_recall"] = nullptr;
  }
  for (const auto& s : skipped) j["skipped"].push_back({{"path", s.path}, {"reason", s.reason}});
  if (include_images) {
    nlohmann::json imgs = nlohmann::json::array();
    for (const auto& o : images) {
      imgs.push_back({{"path", o.path},
                      {"truth", o.truth},
                      {"predicted", o.predicted},
                      {"patches", o.patches},
                      {"synthetic_patches", o.synthetic_patches}});
    }
    j["images"] = imgs;
  }
  if (include_timing) j["seconds"] = seconds;
  return j;
}

EvalReport evaluate_dataset(const Backend& backend, const DatasetManifest& manifest,
                            const EvalOptions& opt) {
  const auto start = std::chrono::steady_clock::now();
  const LabelSpace& backend_labels = backend.label_space();
  if (opt.scoring == Scoring::kMulticlass && opt.mode == EvalMode::kVotedImage) {
    fail(ErrorKind::kValidation, "voted-image mode yields binary verdicts; use binary scoring");
  }

  EvalReport report;
  report.dataset_id = opt.dataset_id.empty() ? manifest.provenance : opt.dataset_id;
  report.backend_id = backend.id();
  report.mode = opt.mode;
  report.scoring = opt.scoring;
  report.policy = opt.policy;
  report.confusion = ConfusionMatrix(opt.scoring == Scoring::kBinary
                                         ? LabelSpace{"authentic", "synthetic"}
                                         : backend_labels);
  report.source_labels = manifest.label_space.empty() ? DatasetManifest::derive_labels(manifest.records)
                                                      : manifest.label_space;
  for (const auto& r : manifest.records) {
    if (std::find(report.source_labels.begin(), report.source_labels.end(), r.label) ==
        report.source_labels.end()) {
      report.source_labels.push_back(r.label);
    }
  }
  if (opt.scoring == Scoring::kMulticlass) {
    for (const auto& l : report.source_labels) {
      if (std::find(backend_labels.begin(), backend_labels.end(), l) == backend_labels.end()) {
        fail(ErrorKind::kValidation, "manifest label '" + l +
                                         "' is not in the backend label space; use binary scoring");
      }
    }
  }
  report.per_source.assign(report.source_labels.size(),
                           std::vector<std::uint64_t>(report.confusion.size(), 0));

  const auto items = run_items(backend, manifest, opt);
  for (std::size_t i = 0; i < items.size(); ++i) {
    const ManifestRecord& rec = manifest.records[i];
    if (!items[i].votes) {
      report.skipped.push_back({rec.path, items[i].skip_reason});
      continue;
    }
    const PatchVotes& v = *items[i].votes;
    std::string truth_col, pred_col;
    if (opt.scoring == Scoring::kBinary) {
      truth_col = verdict_name(binary_truth(rec.label));
      pred_col = verdict_name(v.verdict);
    } else {
      truth_col = rec.label;
      pred_col = backend_labels[v.argmax];
    }
    const std::size_t t = report.confusion.index_of(truth_col);
    const std::size_t p = report.confusion.index_of(pred_col);
    report.confusion.add(t, p);
    const auto src = static_cast<std::size_t>(
        std::find(report.source_labels.begin(), report.source_labels.end(), rec.label) -
        report.source_labels.begin());
    ++report.per_source[src][p];
    report.images.push_back({rec.path, rec.label, pred_col, v.available, v.synthetic});
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

// ------------------------------------------------------------- cross matrix

CrossMatrix CrossMatrix::from_cells(std::vector<std::string> rows, std::vector<std::string> cols,
                                    std::vector<std::optional<double>> cells) {
  if (cells.size() != rows.size() * cols.size()) {
    fail(ErrorKind::kParameter, "cross matrix cell count does not match its shape");
  }
  CrossMatrix m;
  m.row_ids = std::move(rows);
  m.col_ids = std::move(cols);
  m.values = std::move(cells);
  for (const auto& v : m.values) {
    if (v && !(*v >= 0.0 && *v <= 100.0)) fail(ErrorKind::kParameter, "cross matrix values must be in [0, 100]");
  }
  const std::size_t nr = m.row_ids.size(), nc = m.col_ids.size();
  auto mean_of = [](const std::vector<double>& xs) -> std::optional<double> {
    if (xs.empty()) return std::nullopt;
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
  };
  for (std::size_t r = 0; r < nr; ++r) {
    std::vector<double> xs;
    for (std::size_t c = 0; c < nc; ++c) {
      if (auto v = m.at(r, c)) xs.push_back(*v);
    }
    m.row_avg.push_back(mean_of(xs));
  }
  for (std::size_t c = 0; c < nc; ++c) {
    std::vector<double> xs;
    for (std::size_t r = 0; r < nr; ++r) {
      if (auto v = m.at(r, c)) xs.push_back(*v);
    }
    m.col_avg.push_back(mean_of(xs));
  }
  return m;
}

nlohmann::json CrossMatrix::to_json() const {
  auto opt_json = [](const std::optional<double>& v) -> nlohmann::json {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t r = 0; r < row_ids.size(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t c = 0; c < col_ids.size(); ++c) row.push_back(opt_json(at(r, c)));
    rows.push_back(row);
  }
  nlohmann::json ra = nlohmann::json::array(), ca = nlohmann::json::array();
  for (const auto& v : row_avg) ra.push_back(opt_json(v));
  for (const auto& v : col_avg) ca.push_back(opt_json(v));
  return {{"row_ids", row_ids}, {"col_ids", col_ids}, {"values", rows},
          {"row_avg", ra},      {"col_avg", ca},      {"missing", missing},
          {"has_missing", !missing.empty()}};
}

std::string CrossMatrix::to_csv() const {
  std::ostringstream out;
  auto cell = [](const std::optional<double>& v) { return v ? fixed2(*v) : std::string(); };
  out << "";
  for (const auto& c : col_ids) out << "," << c;
  out << ",Avg.\n";
  for (std::size_t r = 0; r < row_ids.size(); ++r) {
    out << row_ids[r];
    for (std::size_t c = 0; c < col_ids.size(); ++c) out << "," << cell(at(r, c));
    out << "," << cell(row_avg[r]) << "\n";
  }
  out << "Avg.";
  for (const auto& v : col_avg) out << "," << cell(v);
  out << ",\n";
  return out.str();
}

std::string_view cross_protocol_name(CrossProtocol p) {
  return p == CrossProtocol::kSyntheticRecall ? "synthetic_recall" : "macro_recall";
}

CrossMatrix cross_matrix(const std::vector<CrossRun>& runs, const std::vector<EvalSet>& sets,
                         CrossProtocol protocol, const EvalOptions& base) {
  std::vector<std::string> rows, cols;
  for (const auto& r : runs) rows.push_back(r.id);
  for (const auto& s : sets) cols.push_back(s.id);
  std::vector<std::optional<double>> cells;
  std::vector<std::string> missing;
  for (const auto& run : runs) {
    for (const auto& set : sets) {
      EvalOptions opt = base;
      opt.dataset_id = set.id;
      opt.alteration = set.alteration;
      opt.scoring = protocol == CrossProtocol::kSyntheticRecall ? Scoring::kBinary : Scoring::kMulticlass;
      try {
        const EvalReport rep = evaluate_dataset(*run.backend, set.manifest, opt);
        if (protocol == CrossProtocol::kSyntheticRecall) {
          cells.push_back(100.0 * recall(rep.confusion, "synthetic"));
        } else {
          cells.push_back(100.0 * macro_recall(rep.confusion));
        }
      } catch (const Error& e) {
        cells.push_back(std::nullopt);
        missing.push_back(run.id + "/" + set.id + ": " + e.what());
      }
    }
  }
  CrossMatrix m = CrossMatrix::from_cells(std::move(rows), std::move(cols), std::move(cells));
  m.missing = std::move(missing);
  return m;
}

// ------------------------------------------------------------- sweep

nlohmann::json SweepTable::to_json() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const auto& r : rows) {
    rows_json.push_back({{"k", r.k}, {"authentic_recall", r.authentic_recall}, {"synthetic_recall", r.synthetic_recall}});
  }
  nlohmann::json sk = nlohmann::json::array();
  for (const auto& s : skipped) sk.push_back({{"path", s.path}, {"reason", s.reason}});
  return {{"n_patches", n_patches},
          {"authentic_images", authentic_images},
          {"synthetic_images", synthetic_images},
          {"rows", rows_json},
          {"skipped", sk}};
}

std::string SweepTable::to_csv() const {
  std::ostringstream out;
  out << "k,authentic_recall,synthetic_recall\n";
  for (const auto& r : rows) {
    out << r.k << "/" << n_patches << "," << fixed2(r.authentic_recall) << "," << fixed2(r.synthetic_recall) << "\n";
  }
  return out.str();
}

SweepTable threshold_sweep(const Backend& backend, const DatasetManifest& authentic,
                           const DatasetManifest& synthetic, const EvalOptions& base) {
  if (authentic.records.empty() || synthetic.records.empty()) {
    fail(ErrorKind::kEmptyDataset, "threshold sweep needs nonempty authentic and synthetic sets");
  }
  EvalOptions opt = base;
  opt.mode = EvalMode::kVotedImage;
  opt.scoring = Scoring::kBinary;
  const auto auth_items = run_items(backend, authentic, opt);
  const auto syn_items = run_items(backend, synthetic, opt);

  SweepTable table;
  table.n_patches = opt.policy.n_patches;
  auto collect = [&](const DatasetManifest& m, const std::vector<WorkItem>& items) {
    std::vector<PatchVotes> out;
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (items[i].votes) {
        out.push_back(*items[i].votes);
      } else {
        table.skipped.push_back({m.records[i].path, items[i].skip_reason});
      }
    }
    return out;
  };
  const auto av = collect(authentic, auth_items);
  const auto sv = collect(synthetic, syn_items);
  table.authentic_images = av.size();
  table.synthetic_images = sv.size();
  if (av.empty() || sv.empty()) fail(ErrorKind::kEmptyDataset, "every image of one class was skipped");

  for (int k = 1; k <= opt.policy.n_patches; ++k) {
    VotingPolicy policy = opt.policy;
    policy.threshold_k = k;
    auto synthetic_count = [&](const std::vector<PatchVotes>& votes) {
      std::size_t n = 0;
      for (const auto& v : votes) {
        if (v.synthetic >= effective_threshold(policy, v.available)) ++n;
      }
      return n;
    };
    SweepRow row;
    row.k = k;
    row.authentic_recall = 100.0 * static_cast<double>(av.size() - synthetic_count(av)) / static_cast<double>(av.size());
    row.synthetic_recall = 100.0 * static_cast<double>(synthetic_count(sv)) / static_cast<double>(sv.size());
    table.rows.push_back(row);
  }
  return table;
}

// ------------------------------------------------------------- resize study

std::string format_signed(double value) {
  char buf[64];
  // Values that print as zero get a plus sign, never "-0.00".
  if (std::abs(value) < 0.005) value = 0.0;
  std::snprintf(buf, sizeof(buf), "%+.2f", value);
  return buf;
}

nlohmann::json DeltaReport::to_json() const {
  auto entry_json = [](const DeltaEntry& e) {
    return nlohmann::json{{"dataset_id", e.dataset_id}, {"label", e.label},   {"center", e.center},
                          {"resized", e.resized},       {"delta", e.delta},   {"delta_text", format_signed(e.delta)}};
  };
  nlohmann::json es = nlohmann::json::array(), as = nlohmann::json::array();
  for (const auto& e : entries) es.push_back(entry_json(e));
  for (const auto& e : averages) as.push_back(entry_json(e));
  return {{"entries", es}, {"averages", as}};
}

DeltaReport resize_vs_crop_report(const std::vector<EvalReport>& center,
                                  const std::vector<EvalReport>& resized) {
  if (center.size() != resized.size()) fail(ErrorKind::kParameter, "center and resized dataset lists differ in length");
  DeltaReport out;
  std::map<std::string, std::vector<const DeltaEntry*>> groups;
  for (std::size_t i = 0; i < center.size(); ++i) {
    const EvalReport& c = center[i];
    const EvalReport& r = resized[i];
    if (c.dataset_id != r.dataset_id) {
      fail(ErrorKind::kParameter, "dataset mismatch: '" + c.dataset_id + "' vs '" + r.dataset_id + "'");
    }
    if (c.backend_id != r.backend_id) fail(ErrorKind::kParameter, "reports come from different backends");
    const auto cr = c.per_class_recall();
    const auto rr = r.per_class_recall();
    if (cr.size() != rr.size()) fail(ErrorKind::kParameter, "class sets differ for dataset '" + c.dataset_id + "'");
    for (const auto& [label, cv] : cr) {
      const auto it = rr.find(label);
      if (it == rr.end()) fail(ErrorKind::kParameter, "class '" + label + "' missing from resized report");
      out.entries.push_back({c.dataset_id, label, cv, it->second, it->second - cv});
    }
  }
  for (const auto& e : out.entries) groups[std::string(verdict_name(binary_truth(e.label)))].push_back(&e);
  for (const auto& [group, members] : groups) {
    DeltaEntry avg{"Average", group, 0.0, 0.0, 0.0};
    for (const auto* e : members) {
      avg.center += e->center;
      avg.resized += e->resized;
    }
    avg.center /= static_cast<double>(members.size());
    avg.resized /= static_cast<double>(members.size());
    avg.delta = avg.resized - avg.center;
    out.averages.push_back(avg);
  }
  return out;
}

}  // namespace sid
