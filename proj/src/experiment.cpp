#include "sid/experiment.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "parallel.hpp"
#include "sid/errors.hpp"
#include "sid/features.hpp"
#include "sid/imageops.hpp"
#include "sid/patches.hpp"
#include "sid/random.hpp"

#ifndef SID_VERSION
#define SID_VERSION "0.0.0"
#endif

namespace sid {

std::string_view tool_version() { return SID_VERSION; }

nlohmann::json EnergyEstimate::to_json() const {
  return {{"energy_kwh", energy_kwh},
          {"intensity_kg_per_kwh", intensity_kg_per_kwh},
          {"emissions_kg", emissions_kg}};
}

EnergyEstimate estimate_co2(double energy_kwh, double intensity_kg_per_kwh) {
  if (!std::isfinite(energy_kwh) || energy_kwh < 0.0) {
    fail(ErrorKind::kParameter, "energy must be a nonnegative number of kWh");
  }
  if (!std::isfinite(intensity_kg_per_kwh) || intensity_kg_per_kwh < 0.0) {
    fail(ErrorKind::kParameter, "carbon intensity must be a nonnegative number of kg/kWh");
  }
  return {energy_kwh, intensity_kg_per_kwh, energy_kwh * intensity_kg_per_kwh};
}

std::string config_hash(const nlohmann::json& config) {
  nlohmann::json canon = config;
  if (canon.is_object()) {
    for (const char* key : {"workers", "output", "csv", "report"}) canon.erase(key);
  }
  const std::string text = canon.dump();
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    fail(ErrorKind::kIo, "SHA-256 digest failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof(buf), "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

nlohmann::json provenance(const std::string& command, const nlohmann::json& config) {
  return {{"tool", "sid"},
          {"version", tool_version()},
          {"command", command},
          {"config_hash", config_hash(config)}};
}

// ------------------------------------------------------------- config pieces

namespace {

ParamRange parse_range(const nlohmann::json& v, const std::string& name) {
  if (v.is_number()) {
    const double x = v.get<double>();
    return {x, x};
  }
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
    return {v[0].get<double>(), v[1].get<double>()};
  }
  fail(ErrorKind::kValidation, "parameter '" + name + "' must be a number or a [lo, hi] pair");
}

AlterationSpec parse_step(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind")) fail(ErrorKind::kValidation, "alteration step needs a 'kind'");
  const std::string name = j.at("kind").get<std::string>();
  const auto kind = parse_alteration(name);
  if (!kind) fail(ErrorKind::kValidation, "unknown alteration kind '" + name + "'");
  AlterationSpec spec = AlterationSpec::with_defaults(*kind, j.value("probability", 1.0));
  if (j.contains("params")) {
    for (const auto& [pname, pval] : j.at("params").items()) {
      if (!spec.ranges.count(pname)) {
        fail(ErrorKind::kValidation, "alteration " + name + " has no parameter '" + pname + "'");
      }
      spec.ranges[pname] = parse_range(pval, pname);
    }
  }
  try {
    spec.validate();
  } catch (const Error& e) {
    fail(ErrorKind::kValidation, e.what());
  }
  return spec;
}

}  // namespace

std::optional<AugmentationPolicy> parse_augmentation(const nlohmann::json& j, std::uint64_t default_seed) {
  if (j.is_null()) return std::nullopt;
  if (j.is_string()) {
    const std::string name = j.get<std::string>();
    if (name == "none") return std::nullopt;
    if (name == "susy") return susy_policy(default_seed);
    if (name == "flip") return flip_policy(default_seed);
    fail(ErrorKind::kValidation, "unknown augmentation preset '" + name + "'");
  }
  AugmentationPolicy policy;
  policy.seed = default_seed;
  const nlohmann::json* steps = &j;
  if (j.is_object()) {
    if (j.contains("preset")) {
      auto p = parse_augmentation(j.at("preset"), j.value("seed", default_seed));
      return p;
    }
    policy.seed = j.value("seed", default_seed);
    if (!j.contains("steps")) fail(ErrorKind::kValidation, "augmentation object needs 'steps' or 'preset'");
    steps = &j.at("steps");
  }
  if (!steps->is_array()) fail(ErrorKind::kValidation, "augmentation steps must be an array");
  for (const auto& s : *steps) policy.steps.push_back(parse_step(s));
  return policy;
}

nlohmann::json augmentation_to_json(const AugmentationPolicy& policy) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : policy.steps) {
    nlohmann::json params = nlohmann::json::object();
    for (const auto& [name, r] : s.ranges) params[name] = {r.lo, r.hi};
    steps.push_back({{"kind", alteration_name(s.kind)}, {"probability", s.probability}, {"params", params}});
  }
  return {{"seed", policy.seed}, {"steps", steps}};
}

VotingPolicy parse_voting_policy(const nlohmann::json& j) {
  VotingPolicy p;
  if (j.is_null()) return p;
  if (j.is_string()) {
    const std::string name = j.get<std::string>();
    if (name == "majority") return VotingPolicy::majority();
    if (name == "strict") return VotingPolicy::strict();
    fail(ErrorKind::kValidation, "unknown voting preset '" + name + "'");
  }
  if (!j.is_object()) fail(ErrorKind::kValidation, "voting policy must be an object or preset name");
  p.n_patches = j.value("n_patches", p.n_patches);
  p.threshold_k = j.value("threshold_k", p.threshold_k);
  p.small_image_fraction = j.value("small_image_fraction", p.small_image_fraction);
  p.include_center = j.value("include_center", p.include_center);
  p.stride = j.value("stride", p.stride);
  const std::string selection = j.value("selection", std::string("top-contrast"));
  if (selection == "center") {
    p.selection = SelectionMode::kCenter;
  } else if (selection == "top-contrast") {
    p.selection = SelectionMode::kTopContrast;
  } else {
    fail(ErrorKind::kValidation, "unknown selection mode '" + selection + "'");
  }
  if (j.contains("binarization")) {
    const auto& b = j.at("binarization");
    const std::string rule = b.value("rule", std::string("argmax"));
    if (rule == "argmax") {
      p.binarization.kind = BinarizationRule::Kind::kArgmax;
    } else if (rule == "synthetic_mass") {
      p.binarization.kind = BinarizationRule::Kind::kSyntheticMass;
    } else {
      fail(ErrorKind::kValidation, "unknown binarization rule '" + rule + "'");
    }
    p.binarization.threshold = b.value("threshold", 0.5);
  }
  try {
    p.validate();
  } catch (const Error& e) {
    fail(ErrorKind::kValidation, e.what());
  }
  return p;
}

TrainConfig parse_train_config(const nlohmann::json& j, std::uint64_t seed) {
  TrainConfig cfg;
  cfg.seed = seed;
  if (j.is_null()) return cfg;
  cfg.max_epochs = j.value("max_epochs", cfg.max_epochs);
  cfg.patience = j.value("patience", cfg.patience);
  cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  const std::string monitor = j.value("monitor", std::string(monitor_name(cfg.monitor)));
  if (monitor == monitor_name(Monitor::kValidationAccuracy)) {
    cfg.monitor = Monitor::kValidationAccuracy;
  } else if (monitor == monitor_name(Monitor::kValidationLoss)) {
    cfg.monitor = Monitor::kValidationLoss;
  } else {
    fail(ErrorKind::kValidation, "unknown monitor '" + monitor + "'");
  }
  try {
    cfg.validate();
  } catch (const Error& e) {
    fail(ErrorKind::kValidation, e.what());
  }
  return cfg;
}

BackendHandle load_backend_ref(const nlohmann::json& ref, const std::filesystem::path& base_dir) {
  if (ref.is_object()) return load_backend(BackendDescriptor::from_json(ref, base_dir));
  if (!ref.is_string()) fail(ErrorKind::kValidation, "backend must be a descriptor object or a file path");
  std::filesystem::path path = ref.get<std::string>();
  if (path.is_relative()) path = base_dir / path;
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kLoad, "cannot open backend file " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kLoad, path.string() + ": " + e.what());
  }
  if (doc.is_object() && doc.contains("weights")) {
    return make_reference_backend(RefModel::from_json(doc), path.stem().string());
  }
  return load_backend(BackendDescriptor::from_json(doc, path.parent_path()));
}

// ------------------------------------------------------------- training

FeatureVector patch_features(const ImageBuffer& img, SelectionMode mode, int side) {
  if (mode == SelectionMode::kCenter) return extract_features(center_crop(img, side));
  const auto patches = select_top_patches(img, 1, side, side / 2);
  return extract_features(patches.front());
}

TrainResult train_from_manifest(const DatasetManifest& manifest, const PatchTrainOptions& opt) {
  const LabelSpace labels = opt.labels ? *opt.labels : DatasetManifest::derive_labels(manifest.records);
  const DatasetManifest train_m = manifest.filter(Split::kTrain);
  const DatasetManifest val_m = manifest.filter(Split::kVal);
  if (train_m.records.empty()) fail(ErrorKind::kEmptyDataset, "manifest has no train records");
  if (val_m.records.empty()) fail(ErrorKind::kEmptyDataset, "manifest has no val records");

  auto label_index = [&](const std::string& label) {
    const auto it = std::find(labels.begin(), labels.end(), label);
    if (it == labels.end()) fail(ErrorKind::kValidation, "record label '" + label + "' not in the label space");
    return static_cast<int>(it - labels.begin());
  };
  auto load_all = [&](const DatasetManifest& m) {
    std::vector<ImageBuffer> images(m.records.size());
    detail::parallel_for(images.size(), opt.workers,
                         [&](std::size_t i) { images[i] = opt.loader(m, m.records[i]); });
    return images;
  };

  const auto train_images = load_all(train_m);
  const auto val_images = load_all(val_m);
  std::vector<int> train_labels;
  for (const auto& r : train_m.records) train_labels.push_back(label_index(r.label));

  LabeledFeatures val_set;
  val_set.features.resize(val_images.size());
  detail::parallel_for(val_images.size(), opt.workers, [&](std::size_t i) {
    val_set.features[i] = patch_features(val_images[i], opt.patch, opt.patch_side);
  });
  for (const auto& r : val_m.records) val_set.labels.push_back(label_index(r.label));

  std::optional<LabeledFeatures> fixed;
  const TrainingFeed feed = [&](int epoch) -> LabeledFeatures {
    if (!opt.augmentation && fixed) return *fixed;
    LabeledFeatures set;
    set.labels = train_labels;
    set.features.resize(train_images.size());
    AugmentationPolicy policy;
    if (opt.augmentation) {
      policy = *opt.augmentation;
      policy.seed = stable_hash(std::to_string(opt.augmentation->seed) + "/epoch/" + std::to_string(epoch));
    }
    detail::parallel_for(train_images.size(), opt.workers, [&](std::size_t i) {
      const ImageBuffer img = opt.augmentation ? augment(train_images[i], policy, i).image : train_images[i];
      set.features[i] = patch_features(img, opt.patch, opt.patch_side);
    });
    if (!opt.augmentation) fixed = set;
    return set;
  };
  return train(feed, val_set, labels, opt.train);
}

}  // namespace sid
