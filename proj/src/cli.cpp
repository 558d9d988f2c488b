#include "sid/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "sid/alterations.hpp"
#include "sid/backends.hpp"
#include "sid/codec.hpp"
#include "sid/dataset.hpp"
#include "sid/errors.hpp"
#include "sid/evaluation.hpp"
#include "sid/experiment.hpp"
#include "sid/glcm.hpp"
#include "sid/imageops.hpp"
#include "sid/patches.hpp"

namespace sid {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kSchemaVersion = 1;

// Effective configuration of one run: config file contents overlaid with
// command-line flags. Relative paths inside the file resolve against its
// directory; paths given as flags are made absolute.
struct RunConfig {
  json doc = json::object();
  fs::path base_dir = fs::current_path();

  bool has(const char* key) const { return doc.contains(key) && !doc.at(key).is_null(); }

  std::uint64_t seed() const {
    if (!has("seed")) fail(ErrorKind::kValidation, "a seed is mandatory (--seed or \"seed\" in the config)");
    const auto& s = doc.at("seed");
    if (!s.is_number_integer() || s.get<std::int64_t>() < 0) {
      fail(ErrorKind::kValidation, "seed must be a nonnegative integer");
    }
    return s.get<std::uint64_t>();
  }

  fs::path path_of(const json& v) const {
    fs::path p = v.get<std::string>();
    return p.is_relative() ? base_dir / p : p;
  }

  // The record written into artifacts: no run-environment keys.
  json record() const {
    json r = doc;
    for (const char* key : {"workers", "output", "csv", "report"}) r.erase(key);
    return r;
  }
};

int default_workers() {
  if (const char* env = std::getenv("SID_WORKERS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
    fail(ErrorKind::kValidation, std::string("SID_WORKERS must be a positive integer, got '") + env + "'");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

int workers_of(const RunConfig& cfg) {
  if (cfg.has("workers")) {
    const int n = cfg.doc.at("workers").get<int>();
    if (n < 1) fail(ErrorKind::kValidation, "workers must be at least 1");
    return n;
  }
  return default_workers();
}

RunConfig load_config(const std::string& path) {
  RunConfig cfg;
  if (path.empty()) return cfg;
  const fs::path p = fs::absolute(path);
  std::ifstream in(p);
  if (!in) fail(ErrorKind::kValidation, "cannot open config " + p.string());
  try {
    cfg.doc = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::kValidation, p.string() + ": " + e.what());
  }
  if (!cfg.doc.is_object()) fail(ErrorKind::kValidation, "config must be a JSON object");
  const int version = cfg.doc.value("schema_version", kSchemaVersion);
  if (version != kSchemaVersion) {
    fail(ErrorKind::kValidation, "unsupported config schema_version " + std::to_string(version));
  }
  cfg.doc["schema_version"] = kSchemaVersion;
  cfg.base_dir = p.parent_path();
  return cfg;
}

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::exists(p)) fail(ErrorKind::kValidation, what + " not found: " + p.string());
}

std::string artifact_text(const json& doc) { return doc.dump(2) + "\n"; }

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorKind::kIo, "write failed for " + path.string());
}

void emit(const RunConfig& cfg, const json& doc, std::ostream& out) {
  if (cfg.has("output")) {
    write_text(cfg.path_of(cfg.doc.at("output")), artifact_text(doc));
  } else {
    out << artifact_text(doc);
  }
}

// A manifest reference is a path or {"path": ..., "split": ...}.
DatasetManifest manifest_of(const RunConfig& cfg, const json& ref, const json& split_default) {
  json split = split_default;
  fs::path path;
  if (ref.is_object()) {
    if (!ref.contains("path")) fail(ErrorKind::kValidation, "manifest reference needs a 'path'");
    path = cfg.path_of(ref.at("path"));
    if (ref.contains("split")) split = ref.at("split");
  } else if (ref.is_string()) {
    path = cfg.path_of(ref);
  } else {
    fail(ErrorKind::kValidation, "manifest must be a path or an object with 'path'");
  }
  require_file(path, "manifest");
  DatasetManifest m = load_manifest(path);
  if (!split.is_null() && split.get<std::string>() != "all") {
    const auto s = parse_split(split.get<std::string>());
    if (!s) fail(ErrorKind::kValidation, "unknown split '" + split.get<std::string>() + "'");
    m = m.filter(*s);
  }
  return m;
}

DatasetManifest manifest_of(const RunConfig& cfg) {
  if (!cfg.has("manifest")) fail(ErrorKind::kValidation, "a manifest is required");
  return manifest_of(cfg, cfg.doc.at("manifest"), cfg.has("split") ? cfg.doc.at("split") : json());
}

BackendHandle backend_of(const RunConfig& cfg, const json& ref) {
  if (ref.is_string()) require_file(cfg.path_of(ref), "backend");
  return load_backend_ref(ref, cfg.base_dir);
}

EvalOptions eval_options_of(const RunConfig& cfg) {
  EvalOptions opt;
  const std::uint64_t seed = cfg.seed();
  if (cfg.has("mode")) {
    const auto m = parse_eval_mode(cfg.doc.at("mode").get<std::string>());
    if (!m) fail(ErrorKind::kValidation, "unknown mode '" + cfg.doc.at("mode").get<std::string>() + "'");
    opt.mode = *m;
  }
  if (cfg.has("scoring")) {
    const std::string s = cfg.doc.at("scoring").get<std::string>();
    if (s == "binary") {
      opt.scoring = Scoring::kBinary;
    } else if (s == "multiclass") {
      opt.scoring = Scoring::kMulticlass;
    } else {
      fail(ErrorKind::kValidation, "unknown scoring '" + s + "'");
    }
  }
  if (cfg.has("voting")) opt.policy = parse_voting_policy(cfg.doc.at("voting"));
  if (cfg.has("alteration")) opt.alteration = parse_augmentation(cfg.doc.at("alteration"), seed);
  opt.patch_side = cfg.doc.value("patch_side", kDefaultPatchSide);
  opt.workers = workers_of(cfg);
  return opt;
}

std::vector<std::string> split_csv_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

// ------------------------------------------------------------- commands

int cmd_eval(const RunConfig& cfg, std::ostream& out) {
  if (!cfg.has("backend")) fail(ErrorKind::kValidation, "a backend is required");
  EvalOptions opt = eval_options_of(cfg);
  const DatasetManifest manifest = manifest_of(cfg);
  const BackendHandle backend = backend_of(cfg, cfg.doc.at("backend"));
  opt.dataset_id = cfg.doc.value("dataset_id", std::string());
  const EvalReport report = evaluate_dataset(*backend, manifest, opt);
  json doc = {{"provenance", provenance("eval", cfg.doc)},
              {"config", cfg.record()},
              {"report", report.to_json(cfg.doc.value("include_images", true),
                                        cfg.doc.value("include_timing", false))}};
  emit(cfg, doc, out);
  return kExitOk;
}

int cmd_cross(const RunConfig& cfg, std::ostream& out) {
  if (!cfg.has("runs") || !cfg.doc.at("runs").is_array() || cfg.doc.at("runs").empty()) {
    fail(ErrorKind::kValidation, "cross needs a nonempty 'runs' array of {id, backend}");
  }
  if (!cfg.has("datasets") || !cfg.doc.at("datasets").is_array() || cfg.doc.at("datasets").empty()) {
    fail(ErrorKind::kValidation, "cross needs a nonempty 'datasets' array of {id, manifest}");
  }
  const EvalOptions opt = eval_options_of(cfg);
  const std::uint64_t seed = cfg.seed();
  const std::string protocol = cfg.doc.value("protocol", std::string("synthetic_recall"));
  CrossProtocol proto;
  if (protocol == cross_protocol_name(CrossProtocol::kSyntheticRecall)) {
    proto = CrossProtocol::kSyntheticRecall;
  } else if (protocol == cross_protocol_name(CrossProtocol::kMacroRecall)) {
    proto = CrossProtocol::kMacroRecall;
  } else {
    fail(ErrorKind::kValidation, "unknown protocol '" + protocol + "'");
  }

  std::vector<EvalSet> sets;
  for (const auto& d : cfg.doc.at("datasets")) {
    EvalSet s;
    s.id = d.at("id").get<std::string>();
    s.manifest = manifest_of(cfg, d.at("manifest"), d.value("split", cfg.doc.value("split", json())));
    if (d.contains("alteration")) s.alteration = parse_augmentation(d.at("alteration"), seed);
    sets.push_back(std::move(s));
  }
  std::vector<CrossRun> runs;
  for (const auto& r : cfg.doc.at("runs")) {
    runs.push_back({r.at("id").get<std::string>(), backend_of(cfg, r.at("backend"))});
  }
  const CrossMatrix m = cross_matrix(runs, sets, proto, opt);
  json doc = {{"provenance", provenance("cross", cfg.doc)},
              {"config", cfg.record()},
              {"protocol", protocol},
              {"matrix", m.to_json()}};
  emit(cfg, doc, out);
  if (cfg.has("csv")) write_text(cfg.path_of(cfg.doc.at("csv")), m.to_csv());
  return kExitOk;
}

int cmd_sweep(const RunConfig& cfg, std::ostream& out) {
  if (!cfg.has("backend")) fail(ErrorKind::kValidation, "a backend is required");
  const EvalOptions opt = eval_options_of(cfg);
  const DatasetManifest all = manifest_of(cfg);
  DatasetManifest authentic = all, synthetic = all;
  authentic.records.clear();
  synthetic.records.clear();
  for (const auto& r : all.records) {
    (binary_truth(r.label) == Verdict::kAuthentic ? authentic : synthetic).records.push_back(r);
  }
  const BackendHandle backend = backend_of(cfg, cfg.doc.at("backend"));
  const SweepTable table = threshold_sweep(*backend, authentic, synthetic, opt);
  json doc = {{"provenance", provenance("sweep", cfg.doc)}, {"config", cfg.record()}, {"sweep", table.to_json()}};
  emit(cfg, doc, out);
  if (cfg.has("csv")) write_text(cfg.path_of(cfg.doc.at("csv")), table.to_csv());
  return kExitOk;
}

int cmd_resize_study(const RunConfig& cfg, std::ostream& out) {
  if (!cfg.has("backend")) fail(ErrorKind::kValidation, "a backend is required");
  std::vector<std::pair<std::string, DatasetManifest>> sets;
  if (cfg.has("datasets")) {
    for (const auto& d : cfg.doc.at("datasets")) {
      sets.emplace_back(d.at("id").get<std::string>(),
                        manifest_of(cfg, d.at("manifest"), d.value("split", cfg.doc.value("split", json()))));
    }
  } else {
    sets.emplace_back(cfg.doc.value("dataset_id", std::string("dataset")), manifest_of(cfg));
  }
  EvalOptions opt = eval_options_of(cfg);
  opt.scoring = Scoring::kBinary;
  const BackendHandle backend = backend_of(cfg, cfg.doc.at("backend"));
  std::vector<EvalReport> center, resized;
  json summaries = json::array();
  for (const auto& [id, m] : sets) {
    opt.dataset_id = id;
    opt.mode = EvalMode::kCenterPatch;
    center.push_back(evaluate_dataset(*backend, m, opt));
    opt.mode = EvalMode::kResized;
    resized.push_back(evaluate_dataset(*backend, m, opt));
    summaries.push_back({{"dataset_id", id},
                         {"center", center.back().to_json(false)},
                         {"resized", resized.back().to_json(false)}});
  }
  const DeltaReport deltas = resize_vs_crop_report(center, resized);
  json doc = {{"provenance", provenance("resize-study", cfg.doc)},
              {"config", cfg.record()},
              {"deltas", deltas.to_json()},
              {"reports", summaries}};
  emit(cfg, doc, out);
  if (cfg.has("csv")) {
    std::ostringstream csv;
    csv << "dataset,label,center,resized,delta\n";
    char buf[64];
    auto fixed = [&](double v) {
      std::snprintf(buf, sizeof(buf), "%.2f", v);
      return std::string(buf);
    };
    for (const auto* group : {&deltas.entries, &deltas.averages}) {
      for (const auto& e : *group) {
        csv << e.dataset_id << "," << e.label << "," << fixed(e.center) << "," << fixed(e.resized) << ","
            << format_signed(e.delta) << "\n";
      }
    }
    write_text(cfg.path_of(cfg.doc.at("csv")), csv.str());
  }
  return kExitOk;
}

int cmd_train(const RunConfig& cfg, std::ostream& out) {
  const std::uint64_t seed = cfg.seed();
  if (!cfg.has("output")) fail(ErrorKind::kValidation, "train needs an output model path");
  PatchTrainOptions opt;
  opt.train = parse_train_config(cfg.has("train") ? cfg.doc.at("train") : json(), seed);
  if (cfg.has("augmentation")) opt.augmentation = parse_augmentation(cfg.doc.at("augmentation"), seed);
  const std::string patch = cfg.doc.value("patch", std::string("center"));
  if (patch == "center") {
    opt.patch = SelectionMode::kCenter;
  } else if (patch == "top-contrast") {
    opt.patch = SelectionMode::kTopContrast;
  } else {
    fail(ErrorKind::kValidation, "unknown patch selection '" + patch + "'");
  }
  opt.patch_side = cfg.doc.value("patch_side", kDefaultPatchSide);
  opt.workers = workers_of(cfg);
  if (cfg.has("labels")) opt.labels = cfg.doc.at("labels").get<LabelSpace>();
  if (!cfg.has("manifest")) fail(ErrorKind::kValidation, "a manifest is required");
  const DatasetManifest manifest = manifest_of(cfg, cfg.doc.at("manifest"), json());

  const TrainResult result = train_from_manifest(manifest, opt);
  const json prov = provenance("train", cfg.doc);
  json model = result.model.to_json();
  model["provenance"] = prov;
  write_text(cfg.path_of(cfg.doc.at("output")), artifact_text(model));
  json report = {{"provenance", prov}, {"config", cfg.record()}, {"training", result.report.to_json()}};
  if (cfg.has("report")) {
    write_text(cfg.path_of(cfg.doc.at("report")), artifact_text(report));
  } else {
    out << artifact_text(report);
  }
  return kExitOk;
}

int cmd_co2(const RunConfig& cfg, std::ostream& out) {
  if (!cfg.has("kwh")) fail(ErrorKind::kValidation, "energy (--kwh) is required");
  double intensity = 0.0;
  if (cfg.has("intensity")) {
    intensity = cfg.doc.at("intensity").get<double>();
  } else if (const char* env = std::getenv("SID_CO2_INTENSITY")) {
    try {
      intensity = std::stod(env);
    } catch (const std::exception&) {
      fail(ErrorKind::kValidation, std::string("SID_CO2_INTENSITY is not a number: ") + env);
    }
  } else {
    fail(ErrorKind::kValidation,
         "carbon intensity is required: --intensity, \"intensity\" in the config, or SID_CO2_INTENSITY");
  }
  EnergyEstimate e;
  try {
    e = estimate_co2(cfg.doc.at("kwh").get<double>(), intensity);
  } catch (const Error& err) {
    fail(ErrorKind::kValidation, err.what());
  }
  emit(cfg, {{"provenance", provenance("co2", cfg.doc)}, {"estimate", e.to_json()}}, out);
  return kExitOk;
}

int cmd_alter(const RunConfig& cfg, std::ostream& out) {
  const std::uint64_t seed = cfg.seed();
  if (!cfg.has("input") || !cfg.has("output")) fail(ErrorKind::kValidation, "alter needs --input and --output");
  const fs::path input = cfg.path_of(cfg.doc.at("input"));
  require_file(input, "input image");
  if (!cfg.has("augmentation")) fail(ErrorKind::kValidation, "alter needs --policy, --kind or \"augmentation\"");
  const auto policy = parse_augmentation(cfg.doc.at("augmentation"), seed);
  const ImageBuffer img = read_image(input);
  AugmentResult result{img, {}};
  if (policy) result = augment(img, *policy, cfg.doc.value("index", std::uint64_t{0}));
  write_png(cfg.path_of(cfg.doc.at("output")), result.image);
  json applied = json::array();
  for (const auto& a : result.applied) {
    applied.push_back({{"kind", alteration_name(a.kind)}, {"step", a.step_index}, {"params", a.params}});
  }
  json doc = {{"provenance", provenance("alter", cfg.doc)}, {"config", cfg.record()}, {"applied", applied}};
  if (cfg.has("report")) {
    write_text(cfg.path_of(cfg.doc.at("report")), artifact_text(doc));
  } else {
    out << artifact_text(doc);
  }
  return kExitOk;
}

int cmd_patchify(const RunConfig& cfg, std::ostream& out) {
  if (!cfg.has("input") || !cfg.has("output")) fail(ErrorKind::kValidation, "patchify needs --input and --output");
  const fs::path input = cfg.path_of(cfg.doc.at("input"));
  require_file(input, "input image");
  const fs::path dir = cfg.path_of(cfg.doc.at("output"));
  const int k = cfg.doc.value("k", 5);
  const int side = cfg.doc.value("patch_side", kDefaultPatchSide);
  const int stride = cfg.doc.value("stride", side / 2);
  const std::string selection = cfg.doc.value("selection", std::string("top-contrast"));
  if (k < 1 || side < 1 || stride < 1) fail(ErrorKind::kValidation, "k, side and stride must be positive");

  const ImageBuffer img = read_image(input);
  const std::string source = input.filename().string();
  std::vector<Patch> patches;
  if (selection == "center") {
    patches.push_back(center_crop(img, side, source));
  } else if (selection == "top-contrast") {
    patches = select_top_patches(img, k, side, stride, source);
  } else {
    fail(ErrorKind::kValidation, "unknown selection '" + selection + "'");
  }
  fs::create_directories(dir);
  json list = json::array();
  for (std::size_t i = 0; i < patches.size(); ++i) {
    const auto& p = patches[i];
    const std::string name = "patch_" + std::to_string(i) + ".png";
    write_png(dir / name, p.pixels);
    list.push_back({{"file", name},
                    {"origin_x", p.origin_x},
                    {"origin_y", p.origin_y},
                    {"side", p.side()},
                    {"padded", p.padded},
                    {"contrast", glcm_contrast(compute_glcm(to_grayscale(p.pixels)))}});
  }
  json doc = {{"provenance", provenance("patchify", cfg.doc)},
              {"source", source},
              {"width", img.width()},
              {"height", img.height()},
              {"patches", list}};
  write_text(dir / "patches.json", artifact_text(doc));
  out << artifact_text(doc);
  return kExitOk;
}

void write_manifest_artifact(const RunConfig& cfg, const std::string& command, const DatasetManifest& m,
                             const std::vector<std::string>& warnings, std::ostream& out) {
  json counts = json::object();
  for (const auto& label : DatasetManifest::derive_labels(m.records)) {
    json per_split = json::object();
    for (Split s : {Split::kTrain, Split::kVal, Split::kTest, Split::kUnassigned}) {
      std::size_t n = 0;
      for (const auto& r : m.records) n += (r.label == label && r.split == s) ? 1 : 0;
      per_split[std::string(split_name(s))] = n;
    }
    counts[label] = per_split;
  }
  json meta = {{"provenance", provenance(command, cfg.doc)},
               {"config", cfg.record()},
               {"records", m.records.size()},
               {"counts", counts},
               {"warnings", warnings}};
  if (cfg.has("output")) {
    const fs::path path = cfg.path_of(cfg.doc.at("output"));
    write_text(path, manifest_to_jsonl(m));
    write_text(path.string() + ".provenance.json", artifact_text(meta));
    out << artifact_text(meta);
  } else {
    out << manifest_to_jsonl(m);
  }
}

// Record paths are rewritten relative to the directory of the output manifest.
DatasetManifest rebase(DatasetManifest m, const RunConfig& cfg) {
  const fs::path target = cfg.has("output") ? cfg.path_of(cfg.doc.at("output")).parent_path() : fs::current_path();
  for (auto& r : m.records) {
    const fs::path abs = m.resolve(r);
    r.path = fs::relative(abs, target).generic_string();
  }
  m.base_dir = target;
  return m;
}

int cmd_dataset(const std::string& action, const RunConfig& cfg, std::ostream& out) {
  if (action == "ingest") {
    if (!cfg.has("root") || !cfg.has("label")) fail(ErrorKind::kValidation, "ingest needs --root and --label");
    const fs::path root = cfg.path_of(cfg.doc.at("root"));
    require_file(root, "dataset root");
    std::optional<int> year;
    if (cfg.has("year")) year = cfg.doc.at("year").get<int>();
    DatasetManifest m = ingest_directory(fs::absolute(root), cfg.doc.at("label").get<std::string>(),
                                         cfg.doc.value("generator", std::string("none")), year);
    write_manifest_artifact(cfg, "dataset ingest", rebase(std::move(m), cfg), {}, out);
    return kExitOk;
  }
  if (action == "merge") {
    if (!cfg.has("manifests")) fail(ErrorKind::kValidation, "merge needs at least one --manifest");
    DatasetManifest merged;
    for (const auto& ref : cfg.doc.at("manifests")) {
      DatasetManifest m = rebase(manifest_of(cfg, ref, json()), cfg);
      merged.records.insert(merged.records.end(), m.records.begin(), m.records.end());
    }
    write_manifest_artifact(cfg, "dataset merge", merged, {}, out);
    return kExitOk;
  }
  if (action == "validate") {
    const DatasetManifest m = manifest_of(cfg, cfg.doc.at("manifest"), json());
    json violations = json::array();
    for (const auto& v : validate_manifest(m)) {
      violations.push_back({{"kind", violation_name(v.kind)}, {"detail", v.detail}});
    }
    emit(cfg, {{"provenance", provenance("dataset validate", cfg.doc)}, {"violations", violations}}, out);
    return violations.empty() ? kExitOk : kExitValidation;
  }
  const std::uint64_t seed = cfg.seed();
  DatasetManifest m = manifest_of(cfg, cfg.doc.at("manifest"), json());
  if (action == "split") {
    SplitRatios ratios;
    if (cfg.has("ratios")) {
      const auto r = cfg.doc.at("ratios").get<std::vector<double>>();
      if (r.size() != 3) fail(ErrorKind::kValidation, "ratios need three values: train, val, test");
      ratios = {r[0], r[1], r[2]};
    }
    SplitResult result;
    try {
      result = split_manifest(m, ratios, seed);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kParameter) throw;
      fail(ErrorKind::kValidation, e.what());
    }
    write_manifest_artifact(cfg, "dataset split", rebase(std::move(result.manifest), cfg), result.warnings, out);
    return kExitOk;
  }
  if (action == "undersample") {
    if (!cfg.has("label") || !cfg.has("cap")) fail(ErrorKind::kValidation, "undersample needs --label and --cap");
    DatasetManifest reduced =
        undersample(m, cfg.doc.at("label").get<std::string>(), cfg.doc.at("cap").get<std::size_t>(), seed);
    write_manifest_artifact(cfg, "dataset undersample", rebase(std::move(reduced), cfg), {}, out);
    return kExitOk;
  }
  fail(ErrorKind::kValidation, "unknown dataset action '" + action + "'");
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kValidation: return kExitValidation;
    default: return kExitFailure;
  }
}

void error_record(std::ostream& err, std::string_view kind, const std::string& message, int code) {
  err << json{{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}}.dump() << "\n";
}

// Flags bound to config keys; only flags actually given override the file.
struct FlagSet {
  std::string config;
  std::vector<std::function<void(json&)>> setters;
  std::vector<std::function<void(json&)>> post;

  template <typename T>
  void bind(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app->add_option(flag, *value, help);
    setters.push_back([opt, value, key](json& doc) {
      if (opt->count() > 0) doc[key] = *value;
    });
  }

  void bind_path(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    auto value = std::make_shared<std::string>();
    CLI::Option* opt = app->add_option(flag, *value, help);
    setters.push_back([opt, value, key](json& doc) {
      if (opt->count() > 0) doc[key] = fs::absolute(*value).string();
    });
  }

  void bind_flag(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    CLI::Option* opt = app->add_flag(flag, help);
    setters.push_back([opt, key](json& doc) {
      if (opt->count() > 0) doc[key] = true;
    });
  }

  RunConfig resolve() const {
    RunConfig cfg = load_config(config);
    for (const auto& s : setters) s(cfg.doc);
    for (const auto& s : post) s(cfg.doc);
    return cfg;
  }
};

void add_common(CLI::App* app, FlagSet& f) {
  app->add_option("--config", f.config, "JSON experiment config");
  f.bind<std::uint64_t>(app, "--seed", "seed", "Random seed (mandatory for experiments)");
  f.bind<int>(app, "--workers", "workers", "Worker threads (default: SID_WORKERS or all cores)");
  f.bind_path(app, "--output,-o", "output", "Output artifact path");
}

void add_eval_flags(CLI::App* app, FlagSet& f) {
  f.bind_path(app, "--backend", "backend", "Backend descriptor or reference model file");
  f.bind_path(app, "--manifest", "manifest", "Dataset manifest (JSON Lines)");
  f.bind<std::string>(app, "--split", "split", "Manifest split to evaluate (train|val|test|all)");
  f.bind<std::string>(app, "--mode", "mode", "center-patch | voted-image | resized");
  f.bind<std::string>(app, "--scoring", "scoring", "binary | multiclass");
  f.bind<int>(app, "--patch-side", "patch_side", "Patch side in pixels");
  f.bind_path(app, "--csv", "csv", "Also write a CSV table here");

  auto n = std::make_shared<int>(0);
  auto k = std::make_shared<int>(0);
  auto sel = std::make_shared<std::string>();
  CLI::Option* on = app->add_option("--n-patches", *n, "Patches per image for voting");
  CLI::Option* ok = app->add_option("--threshold-k", *k, "Synthetic patches needed for a synthetic verdict");
  CLI::Option* os = app->add_option("--selection", *sel, "center | top-contrast");
  CLI::Option* oc = app->add_flag("--include-center", "Force the center patch into the voting set");
  f.post.push_back([=](json& doc) {
    if (on->count() + ok->count() + os->count() + oc->count() == 0) return;
    json& v = doc["voting"];
    if (v.is_string()) v = v == "strict" ? json{{"threshold_k", 5}} : json::object();
    if (v.is_null()) v = json::object();
    if (on->count()) v["n_patches"] = *n;
    if (ok->count()) v["threshold_k"] = *k;
    if (os->count()) v["selection"] = *sel;
    if (oc->count()) v["include_center"] = true;
  });
}

}  // namespace

int run_command(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Synthetic image detection benchmarking toolkit", "sid"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(tool_version()));

  std::map<CLI::App*, FlagSet> flags;
  std::map<CLI::App*, std::function<int(const RunConfig&)>> handlers;

  auto* eval = app.add_subcommand("eval", "Evaluate a backend on a manifest");
  add_common(eval, flags[eval]);
  add_eval_flags(eval, flags[eval]);
  flags[eval].bind_flag(eval, "--timing", "include_timing", "Record wall-clock time in the report");
  handlers[eval] = [&](const RunConfig& c) { return cmd_eval(c, out); };

  auto* cross = app.add_subcommand("cross", "Cross-generalization matrix over runs and datasets");
  add_common(cross, flags[cross]);
  add_eval_flags(cross, flags[cross]);
  flags[cross].bind<std::string>(cross, "--protocol", "protocol", "synthetic_recall | macro_recall");
  handlers[cross] = [&](const RunConfig& c) { return cmd_cross(c, out); };

  auto* sweep = app.add_subcommand("sweep", "Voting threshold sweep k = 1..n");
  add_common(sweep, flags[sweep]);
  add_eval_flags(sweep, flags[sweep]);
  handlers[sweep] = [&](const RunConfig& c) { return cmd_sweep(c, out); };

  auto* resize = app.add_subcommand("resize-study", "Center-patch vs whole-image resize recall deltas");
  add_common(resize, flags[resize]);
  add_eval_flags(resize, flags[resize]);
  handlers[resize] = [&](const RunConfig& c) { return cmd_resize_study(c, out); };

  auto* train_cmd = app.add_subcommand("train", "Train the reference model on a split manifest");
  add_common(train_cmd, flags[train_cmd]);
  flags[train_cmd].bind_path(train_cmd, "--manifest", "manifest", "Manifest with train and val splits");
  flags[train_cmd].bind_path(train_cmd, "--report", "report", "Training report path");
  flags[train_cmd].bind<std::string>(train_cmd, "--augmentation", "augmentation", "none | susy | flip");
  flags[train_cmd].bind<std::string>(train_cmd, "--patch", "patch", "center | top-contrast");
  handlers[train_cmd] = [&](const RunConfig& c) { return cmd_train(c, out); };

  auto* co2 = app.add_subcommand("co2", "Carbon footprint estimate from measured energy");
  add_common(co2, flags[co2]);
  flags[co2].bind<double>(co2, "--kwh", "kwh", "Energy consumed in kWh");
  flags[co2].bind<double>(co2, "--intensity", "intensity", "Grid carbon intensity in kg CO2 per kWh");
  handlers[co2] = [&](const RunConfig& c) { return cmd_co2(c, out); };

  auto* alter = app.add_subcommand("alter", "Apply an alteration policy to one image");
  add_common(alter, flags[alter]);
  flags[alter].bind_path(alter, "--input,-i", "input", "Input image");
  flags[alter].bind_path(alter, "--report", "report", "Where to write the applied-parameters record");
  flags[alter].bind<std::uint64_t>(alter, "--index", "index", "Image index keying the random stream");
  flags[alter].bind<std::string>(alter, "--policy", "augmentation", "Preset: susy | flip | none");
  {
    auto kind = std::make_shared<std::string>();
    auto params = std::make_shared<std::vector<std::string>>();
    CLI::Option* ok = alter->add_option("--kind", *kind, "Single alteration applied with probability 1");
    alter->add_option("--param", *params, "name=value for --kind (repeatable)");
    flags[alter].post.push_back([=](json& doc) {
      if (!ok->count()) return;
      json p = json::object();
      for (const auto& kv : *params) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) fail(ErrorKind::kValidation, "--param expects name=value, got '" + kv + "'");
        try {
          p[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
        } catch (const std::exception&) {
          fail(ErrorKind::kValidation, "--param value is not a number: '" + kv + "'");
        }
      }
      doc["augmentation"] = json::array({{{"kind", *kind}, {"probability", 1.0}, {"params", p}}});
    });
  }
  handlers[alter] = [&](const RunConfig& c) { return cmd_alter(c, out); };

  auto* patchify = app.add_subcommand("patchify", "Extract top-contrast patches from one image");
  add_common(patchify, flags[patchify]);
  flags[patchify].bind_path(patchify, "--input,-i", "input", "Input image");
  flags[patchify].bind<int>(patchify, "--k", "k", "Number of patches");
  flags[patchify].bind<int>(patchify, "--side", "patch_side", "Patch side");
  flags[patchify].bind<int>(patchify, "--stride", "stride", "Candidate grid stride");
  flags[patchify].bind<std::string>(patchify, "--selection", "selection", "center | top-contrast");
  handlers[patchify] = [&](const RunConfig& c) { return cmd_patchify(c, out); };

  auto* dataset = app.add_subcommand("dataset", "Manifest tooling");
  dataset->require_subcommand(1);
  for (const char* action : {"ingest", "merge", "split", "undersample", "validate"}) {
    auto* sub = dataset->add_subcommand(action, std::string("dataset ") + action);
    FlagSet& f = flags[sub];
    add_common(sub, f);
    const std::string a = action;
    if (a == "ingest") {
      f.bind_path(sub, "--root", "root", "Directory to scan for PNG/JPEG files");
      f.bind<std::string>(sub, "--label", "label", "Class label for every record");
      f.bind<std::string>(sub, "--generator", "generator", "Generator name");
      f.bind<int>(sub, "--year", "year", "Generator release year");
    } else if (a == "merge") {
      auto paths = std::make_shared<std::vector<std::string>>();
      CLI::Option* o = sub->add_option("--manifest", *paths, "Manifest to merge (repeatable)");
      f.post.push_back([=](json& doc) {
        if (!o->count()) return;
        json list = json::array();
        for (const auto& p : *paths) list.push_back(fs::absolute(p).string());
        doc["manifests"] = list;
      });
    } else {
      f.bind_path(sub, "--manifest", "manifest", "Input manifest");
    }
    if (a == "split") {
      auto ratios = std::make_shared<std::string>();
      CLI::Option* o = sub->add_option("--ratios", *ratios, "train,val,test (default 0.6,0.2,0.2)");
      f.post.push_back([=](json& doc) {
        if (!o->count()) return;
        std::vector<double> r;
        for (const auto& s : split_csv_list(*ratios)) {
          try {
            r.push_back(std::stod(s));
          } catch (const std::exception&) {
            fail(ErrorKind::kValidation, "ratio is not a number: '" + s + "'");
          }
        }
        doc["ratios"] = r;
      });
    }
    if (a == "undersample") {
      f.bind<std::string>(sub, "--label", "label", "Class to reduce");
      f.bind<std::size_t>(sub, "--cap", "cap", "Maximum records kept");
    }
    handlers[sub] = [&out, a](const RunConfig& c) { return cmd_dataset(a, c, out); };
  }

  std::vector<const char*> cargv;
  for (const auto& a : argv) cargv.push_back(a.c_str());
  if (cargv.empty()) cargv.push_back("sid");

  try {
    app.parse(static_cast<int>(cargv.size()), cargv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << tool_version() << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    error_record(err, "usage_error", e.what(), kExitUsage);
    return kExitUsage;
  }

  CLI::App* leaf = app.get_subcommands().front();
  while (!leaf->get_subcommands().empty()) leaf = leaf->get_subcommands().front();
  try {
    const RunConfig cfg = flags.at(leaf).resolve();
    return handlers.at(leaf)(cfg);
  } catch (const Error& e) {
    const int code = exit_code_for(e.kind());
    error_record(err, error_kind_name(e.kind()), e.what(), code);
    return code;
  } catch (const json::exception& e) {
    error_record(err, error_kind_name(ErrorKind::kValidation), std::string("config: ") + e.what(), kExitValidation);
    return kExitValidation;
  } catch (const std::exception& e) {
    error_record(err, "internal_error", e.what(), kExitFailure);
    return kExitFailure;
  }
}

}  // namespace sid
