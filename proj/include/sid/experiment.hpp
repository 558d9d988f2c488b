#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"

#include "sid/alterations.hpp"
#include "sid/backends.hpp"
#include "sid/dataset.hpp"
#include "sid/evaluation.hpp"
#include "sid/refmodel.hpp"

namespace sid {

std::string_view tool_version();

// ------------------------------------------------------------- footprint

struct EnergyEstimate {
  double energy_kwh = 0.0;
  double intensity_kg_per_kwh = 0.0;
  double emissions_kg = 0.0;

  nlohmann::json to_json() const;
};

/// emissions = energy * intensity; negative or non-finite inputs are
/// parameter errors.
EnergyEstimate estimate_co2(double energy_kwh, double intensity_kg_per_kwh);

// ------------------------------------------------------------- provenance

/// Hex SHA-256 of the canonical (sorted-key, compact) dump of the config with
/// run-environment keys removed: "workers", "output", "csv", "report".
std::string config_hash(const nlohmann::json& config);

/// {"tool": "sid", "version": ..., "command": ..., "config_hash": ...}
nlohmann::json provenance(const std::string& command, const nlohmann::json& config);

// ------------------------------------------------------------- config pieces

/// Accepts a preset name ("none", "susy", "flip"), an array of steps, or an
/// object {"steps": [...], "seed": n}. A step is
/// {"kind": "JpegCompress", "probability": p, "params": {"quality": [lo, hi] | v}};
/// omitted params take the kind's full default range. Returns nullopt for
/// "none" or null.
std::optional<AugmentationPolicy> parse_augmentation(const nlohmann::json& j, std::uint64_t default_seed);
nlohmann::json augmentation_to_json(const AugmentationPolicy& policy);

VotingPolicy parse_voting_policy(const nlohmann::json& j);
TrainConfig parse_train_config(const nlohmann::json& j, std::uint64_t seed);

/// A backend reference is a descriptor object, a path to a descriptor file,
/// or a path to a reference model file (recognized by its "weights" key).
BackendHandle load_backend_ref(const nlohmann::json& ref, const std::filesystem::path& base_dir);

// ------------------------------------------------------------- training

struct PatchTrainOptions {
  TrainConfig train;
  // Applied to training images only, re-drawn every epoch.
  std::optional<AugmentationPolicy> augmentation;
  SelectionMode patch = SelectionMode::kCenter;
  int patch_side = kDefaultPatchSide;
  int workers = 1;
  // Defaults to the manifest's labels in first-appearance order.
  std::optional<LabelSpace> labels;
  ImageLoader loader = load_record_image;
};

/// Trains a reference model on the manifest's train split, monitoring the val
/// split. Each image contributes one patch per epoch.
TrainResult train_from_manifest(const DatasetManifest& manifest, const PatchTrainOptions& options);

/// Feature vector of the patch a training or evaluation pipeline would use.
FeatureVector patch_features(const ImageBuffer& img, SelectionMode mode, int side);

}  // namespace sid
