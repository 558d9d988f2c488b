#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "sid/codec.hpp"
#include "sid/refmodel.hpp"

namespace sid {

enum class Split { kTrain, kVal, kTest, kUnassigned };

std::string_view split_name(Split s);
std::optional<Split> parse_split(std::string_view name);

struct ManifestRecord {
  std::string path;
  std::string label;
  std::string generator = "none";
  std::optional<int> year;
  ImageFormat format = ImageFormat::kPng;
  Split split = Split::kUnassigned;

  friend bool operator==(const ManifestRecord&, const ManifestRecord&) = default;
};

nlohmann::json record_to_json(const ManifestRecord& r);
ManifestRecord record_from_json(const nlohmann::json& j);

struct DatasetManifest {
  std::vector<ManifestRecord> records;
  LabelSpace label_space;
  std::string provenance;
  // Relative record paths resolve against this directory.
  std::filesystem::path base_dir;

  /// Labels in order of first appearance.
  static LabelSpace derive_labels(const std::vector<ManifestRecord>& records);

  std::filesystem::path resolve(const ManifestRecord& r) const;

  /// Records of one split, keeping manifest order.
  DatasetManifest filter(Split split) const;

  std::size_t count(const std::string& label) const;
};

/// JSON Lines, one record per line.
DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const DatasetManifest& m, const std::filesystem::path& path);
std::string manifest_to_jsonl(const DatasetManifest& m);

/// Recursively collects PNG/JPEG files (by extension), sorted by path.
DatasetManifest ingest_directory(const std::filesystem::path& root, const std::string& label,
                                 const std::string& generator = "none",
                                 std::optional<int> year = std::nullopt);

struct SplitRatios {
  double train = 0.6;
  double val = 0.2;
  double test = 0.2;
};

/// Largest-remainder apportionment of n items; ties go train > val > test.
std::array<std::size_t, 3> apportion(std::size_t n, const std::array<double, 3>& weights);

struct SplitResult {
  DatasetManifest manifest;
  std::vector<std::string> warnings;
};

/// Keeps existing splits; shuffles each class's unassigned records with a
/// seeded stream and partitions them by the ratios.
SplitResult split_manifest(const DatasetManifest& m, const SplitRatios& ratios, std::uint64_t seed);

/// Seeded uniform reduction of one class to at most `cap` records, stratified
/// by split when any of the class's records carry one. Record order is kept.
DatasetManifest undersample(const DatasetManifest& m, const std::string& label, std::size_t cap,
                            std::uint64_t seed);

enum class ViolationKind { kMissingFile, kDuplicatePath, kUnknownLabel, kEmptySplit };

std::string_view violation_name(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::string detail;
};

/// Violations are data: an empty list means the manifest is well-formed.
std::vector<Violation> validate_manifest(const DatasetManifest& m);

}  // namespace sid
