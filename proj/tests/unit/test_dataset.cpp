#include <algorithm>
#include <fstream>
#include <set>

#include "doctest.h"
#include "sid/codec.hpp"
#include "sid/dataset.hpp"
#include "sid/errors.hpp"
#include "test_support.hpp"

using namespace sid;
namespace fs = std::filesystem;

namespace {

DatasetManifest synthetic_manifest(const std::string& label, std::size_t n, const std::string& prefix = "") {
  DatasetManifest m;
  for (std::size_t i = 0; i < n; ++i) {
    ManifestRecord r;
    r.path = prefix + label + "/" + std::to_string(i) + ".png";
    r.label = label;
    m.records.push_back(r);
  }
  m.label_space = {label};
  return m;
}

std::map<Split, std::size_t> split_counts(const DatasetManifest& m, const std::string& label) {
  std::map<Split, std::size_t> c;
  for (const auto& r : m.records) {
    if (r.label == label) ++c[r.split];
  }
  return c;
}

}  // namespace

TEST_CASE("largest-remainder apportionment") {
  CHECK(apportion(100, {0.6, 0.2, 0.2}) == std::array<std::size_t, 3>{60, 20, 20});
  CHECK(apportion(10, {0.6, 0.2, 0.2}) == std::array<std::size_t, 3>{6, 2, 2});
  CHECK(apportion(7, {0.6, 0.2, 0.2}) == std::array<std::size_t, 3>{4, 2, 1});  // 4.2, 1.4, 1.4
  CHECK(apportion(2, {0.6, 0.2, 0.2}) == std::array<std::size_t, 3>{1, 1, 0});
  CHECK(apportion(1, {0.6, 0.2, 0.2}) == std::array<std::size_t, 3>{1, 0, 0});
}

TEST_CASE("split 100 and 10 records exactly 60/20/20") {
  for (std::size_t n : {100u, 10u}) {
    const auto r = split_manifest(synthetic_manifest("authentic", n), {}, 7);
    const auto c = split_counts(r.manifest, "authentic");
    CHECK(c.at(Split::kTrain) == n * 6 / 10);
    CHECK(c.at(Split::kVal) == n * 2 / 10);
    CHECK(c.at(Split::kTest) == n * 2 / 10);
    CHECK(r.warnings.empty());
  }
}

TEST_CASE("preexisting splits are kept and splits partition each class") {
  DatasetManifest m = synthetic_manifest("sdxl", 50);
  for (int i = 0; i < 10; ++i) m.records[i].split = Split::kTest;
  DatasetManifest other = synthetic_manifest("authentic", 20);
  m.records.insert(m.records.end(), other.records.begin(), other.records.end());
  m.label_space = {"sdxl", "authentic"};
  const auto r = split_manifest(m, {}, 11);
  for (int i = 0; i < 10; ++i) CHECK(r.manifest.records[i].split == Split::kTest);
  const auto c = split_counts(r.manifest, "sdxl");
  CHECK(c.at(Split::kTrain) == 24);
  CHECK(c.at(Split::kVal) == 8);
  CHECK(c.at(Split::kTest) == 18);
  CHECK(c.count(Split::kUnassigned) == 0);
  CHECK(r.manifest.records.size() == m.records.size());
  for (std::size_t i = 0; i < m.records.size(); ++i) CHECK(r.manifest.records[i].path == m.records[i].path);
}

TEST_CASE("split is seed-deterministic and idempotent") {
  const DatasetManifest m = synthetic_manifest("mj56", 37);
  const auto a = split_manifest(m, {}, 3);
  const auto b = split_manifest(m, {}, 3);
  const auto c = split_manifest(m, {}, 4);
  CHECK(a.manifest.records == b.manifest.records);
  CHECK(a.manifest.records != c.manifest.records);
  CHECK(split_manifest(a.manifest, {}, 3).manifest.records == a.manifest.records);
}

TEST_CASE("tiny classes warn and fill train first") {
  const auto r = split_manifest(synthetic_manifest("glide", 2), {}, 1);
  CHECK(r.warnings.size() == 1);
  const auto c = split_counts(r.manifest, "glide");
  CHECK(c.at(Split::kTrain) == 1);
  CHECK(c.at(Split::kVal) == 1);
  CHECK_THROWS_AS(split_manifest(synthetic_manifest("x", 3), {0.5, 0.5, 0.5}, 1), Error);
}

TEST_CASE("undersampling 6000 to the 5435 cap") {
  DatasetManifest m = synthetic_manifest("authentic", 6000);
  const DatasetManifest keep = synthetic_manifest("sdxl", 300);
  m.records.insert(m.records.end(), keep.records.begin(), keep.records.end());
  m.label_space = {"authentic", "sdxl"};
  const auto split = split_manifest(m, {}, 5).manifest;
  const auto u = undersample(split, "authentic", 5435, 9);
  CHECK(u.count("authentic") == 5435);
  CHECK(u.count("sdxl") == 300);
  const auto before = split_counts(split, "authentic");
  const auto after = split_counts(u, "authentic");
  for (const auto& [s, n] : before) {
    const double expected = 5435.0 * static_cast<double>(n) / 6000.0;
    CHECK(std::abs(static_cast<double>(after.at(s)) - expected) <= 1.0);
  }
  // Order is preserved and the survivors are a subset.
  std::set<std::string> all;
  for (const auto& r : split.records) all.insert(r.path);
  for (const auto& r : u.records) CHECK(all.count(r.path) == 1);
  CHECK(undersample(split, "authentic", 5435, 9).records == u.records);
  CHECK(undersample(u, "authentic", 5435, 9).records == u.records);
  CHECK(undersample(split, "sdxl", 5435, 9).records == split.records);
  CHECK_THROWS_AS(undersample(split, "dalle3", 10, 1), Error);
}

TEST_CASE("ingest lists images sorted and skips other files") {
  testing::TempDir dir;
  fs::create_directories(dir / "sub");
  const ImageBuffer img = testing::constant_image(4, 4, 1, 2, 3);
  write_png(dir / "b.png", img);
  write_png(dir / "sub" / "a.PNG", img);
  {
    std::ofstream(dir / "notes.txt") << "x";
    std::ofstream(dir / "c.jpg", std::ios::binary).write("", 0);
  }
  const DatasetManifest m = ingest_directory(dir.path(), "authentic", "none", 2020);
  REQUIRE(m.records.size() == 3);
  CHECK(m.records[0].path < m.records[1].path);
  CHECK(m.records[1].path < m.records[2].path);
  CHECK(m.records[1].format == ImageFormat::kJpeg);
  CHECK(m.records[0].split == Split::kUnassigned);
  testing::TempDir empty;
  CHECK_THROWS_AS(ingest_directory(empty.path(), "x"), Error);
  CHECK_THROWS_AS(ingest_directory(empty / "missing", "x"), Error);
}

TEST_CASE("manifest JSONL round trip and validation") {
  testing::TempDir dir;
  const ImageBuffer img = testing::constant_image(4, 4, 1, 2, 3);
  write_png(dir / "a.png", img);
  write_png(dir / "b.png", img);
  DatasetManifest m;
  ManifestRecord a{"a.png", "authentic", "none", std::nullopt, ImageFormat::kPng, Split::kTrain};
  ManifestRecord b{"b.png", "sdxl", "SDXL", 2023, ImageFormat::kPng, Split::kTest};
  m.records = {a, b};
  save_manifest(m, dir / "m.jsonl");
  const DatasetManifest back = load_manifest(dir / "m.jsonl");
  CHECK(back.records == m.records);
  CHECK(back.label_space == LabelSpace{"authentic", "sdxl"});

  auto kinds = [](const DatasetManifest& x) {
    std::vector<ViolationKind> k;
    for (const auto& v : validate_manifest(x)) k.push_back(v.kind);
    return k;
  };
  // Each class misses two of the three splits.
  CHECK(kinds(back) == std::vector<ViolationKind>(4, ViolationKind::kEmptySplit));
  DatasetManifest ok = back;
  for (auto& r : ok.records) r.split = Split::kUnassigned;
  CHECK(kinds(ok).empty());
  DatasetManifest dup = ok;
  dup.records.push_back(dup.records[0]);
  CHECK(kinds(dup) == std::vector<ViolationKind>{ViolationKind::kDuplicatePath});
  fs::remove(dir / "b.png");
  CHECK(kinds(ok) == std::vector<ViolationKind>{ViolationKind::kMissingFile});

  CHECK_THROWS_AS(record_from_json({{"path", "x.png"}, {"label", "a"}, {"year", 2010}}), Error);
}
