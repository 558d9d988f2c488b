#include "sid/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "sid/errors.hpp"
#include "sid/random.hpp"

namespace sid {

namespace fs = std::filesystem;

std::string_view split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
    case Split::kUnassigned: return "unassigned";
  }
  return "unassigned";
}

std::optional<Split> parse_split(std::string_view name) {
  for (Split s : {Split::kTrain, Split::kVal, Split::kTest, Split::kUnassigned}) {
    if (split_name(s) == name) return s;
  }
  return std::nullopt;
}

nlohmann::json record_to_json(const ManifestRecord& r) {
  nlohmann::json j = {{"path", r.path},
                      {"label", r.label},
                      {"generator", r.generator},
                      {"year", nullptr},
                      {"format", r.format == ImageFormat::kPng ? "PNG" : "JPEG"},
                      {"split", split_name(r.split)}};
  if (r.year) j["year"] = *r.year;
  return j;
}

ManifestRecord record_from_json(const nlohmann::json& j) {
  ManifestRecord r;
  try {
    r.path = j.at("path").get<std::string>();
    r.label = j.at("label").get<std::string>();
    r.generator = j.value("generator", "none");
    if (j.contains("year") && !j.at("year").is_null()) r.year = j.at("year").get<int>();
    const std::string fmt = j.value("format", "PNG");
    if (fmt == "PNG") {
      r.format = ImageFormat::kPng;
    } else if (fmt == "JPEG") {
      r.format = ImageFormat::kJpeg;
    } else {
      fail(ErrorKind::kValidation, "record format must be PNG or JPEG, got '" + fmt + "'");
    }
    const auto split = parse_split(j.value("split", "unassigned"));
    if (!split) fail(ErrorKind::kValidation, "unknown split in record " + r.path);
    r.split = *split;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kValidation, std::string("malformed manifest record: ") + e.what());
  }
  if (r.year && *r.year < 2014) fail(ErrorKind::kValidation, "record year must be >= 2014: " + r.path);
  return r;
}

LabelSpace DatasetManifest::derive_labels(const std::vector<ManifestRecord>& records) {
  LabelSpace out;
  for (const auto& r : records) {
    if (std::find(out.begin(), out.end(), r.label) == out.end()) out.push_back(r.label);
  }
  return out;
}

fs::path DatasetManifest::resolve(const ManifestRecord& r) const {
  fs::path p = r.path;
  if (p.is_relative() && !base_dir.empty()) return base_dir / p;
  return p;
}

DatasetManifest DatasetManifest::filter(Split split) const {
  DatasetManifest out = *this;
  out.records.clear();
  for (const auto& r : records) {
    if (r.split == split) out.records.push_back(r);
  }
  return out;
}

std::size_t DatasetManifest::count(const std::string& label) const {
  return static_cast<std::size_t>(std::count_if(records.begin(), records.end(),
                                                 [&](const auto& r) { return r.label == label; }));
}

DatasetManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kLoad, "cannot open manifest " + path.string());
  DatasetManifest m;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::kValidation, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    m.records.push_back(record_from_json(j));
  }
  m.label_space = DatasetManifest::derive_labels(m.records);
  m.provenance = path.string();
  m.base_dir = path.parent_path();
  return m;
}

std::string manifest_to_jsonl(const DatasetManifest& m) {
  std::string out;
  for (const auto& r : m.records) {
    out += record_to_json(r).dump();
    out += '\n';
  }
  return out;
}

void save_manifest(const DatasetManifest& m, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::kIo, "cannot write manifest " + path.string());
  out << manifest_to_jsonl(m);
}

DatasetManifest ingest_directory(const fs::path& root, const std::string& label,
                                 const std::string& generator, std::optional<int> year) {
  if (!fs::is_directory(root)) fail(ErrorKind::kLoad, "dataset directory not found: " + root.string());
  std::vector<std::pair<std::string, ImageFormat>> found;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png") {
      found.emplace_back(entry.path().generic_string(), ImageFormat::kPng);
    } else if (ext == ".jpg" || ext == ".jpeg") {
      found.emplace_back(entry.path().generic_string(), ImageFormat::kJpeg);
    }
  }
  if (found.empty()) fail(ErrorKind::kEmptyDataset, "no PNG or JPEG files under " + root.string());
  std::sort(found.begin(), found.end());
  DatasetManifest m;
  for (auto& [path, fmt] : found) {
    ManifestRecord r;
    r.path = path;
    r.label = label;
    r.generator = generator;
    r.year = year;
    r.format = fmt;
    m.records.push_back(std::move(r));
  }
  m.label_space = {label};
  m.provenance = "ingested from " + root.generic_string();
  return m;
}

std::array<std::size_t, 3> apportion(std::size_t n, const std::array<double, 3>& weights) {
  std::array<std::size_t, 3> out{};
  std::array<double, 3> frac{};
  std::size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    const double quota = static_cast<double>(n) * weights[i];
    // Tolerance absorbs products such as 10 * 0.6 landing just below 6.
    const double whole = std::floor(quota + 1e-9);
    out[i] = static_cast<std::size_t>(whole);
    frac[i] = std::max(0.0, quota - whole);
    assigned += out[i];
  }
  std::array<int, 3> order = {0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return frac[a] > frac[b] + 1e-12; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++out[order[k % 3]];
  return out;
}

SplitResult split_manifest(const DatasetManifest& m, const SplitRatios& ratios, std::uint64_t seed) {
  const std::array<double, 3> w = {ratios.train, ratios.val, ratios.test};
  for (double v : w) {
    if (!(v >= 0.0)) fail(ErrorKind::kParameter, "split ratios must be nonnegative");
  }
  if (std::abs(w[0] + w[1] + w[2] - 1.0) > 1e-9) fail(ErrorKind::kParameter, "split ratios must sum to 1");

  SplitResult result{m, {}};
  auto& records = result.manifest.records;
  const LabelSpace labels = m.label_space.empty() ? DatasetManifest::derive_labels(records) : m.label_space;
  for (const auto& label : labels) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (records[i].label == label && records[i].split == Split::kUnassigned) idx.push_back(i);
    }
    if (idx.empty()) continue;
    const std::size_t requested = static_cast<std::size_t>(std::count_if(w.begin(), w.end(), [](double v) { return v > 0.0; }));
    if (idx.size() < requested) {
      result.warnings.push_back("class '" + label + "' has only " + std::to_string(idx.size()) +
                                " unassigned records; filled in priority order train > val > test");
    }
    CounterRng rng(seed, stable_hash(label), 0x73706c74u);
    shuffle_with(idx, rng);
    const auto counts = apportion(idx.size(), w);
    std::size_t k = 0;
    for (int s = 0; s < 3; ++s) {
      for (std::size_t c = 0; c < counts[s]; ++c) records[idx[k++]].split = static_cast<Split>(s);
    }
  }
  return result;
}

DatasetManifest undersample(const DatasetManifest& m, const std::string& label, std::size_t cap,
                            std::uint64_t seed) {
  if (cap < 1) fail(ErrorKind::kParameter, "undersample cap must be at least 1");
  const LabelSpace labels = m.label_space.empty() ? DatasetManifest::derive_labels(m.records) : m.label_space;
  if (std::find(labels.begin(), labels.end(), label) == labels.end()) {
    fail(ErrorKind::kParameter, "unknown class '" + label + "'");
  }
  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < m.records.size(); ++i) {
    if (m.records[i].label == label) members.push_back(i);
  }
  if (members.size() <= cap) return m;

  // Group by split; a class with no split information is one stratum.
  std::map<Split, std::vector<std::size_t>> strata;
  for (auto i : members) strata[m.records[i].split].push_back(i);

  std::vector<Split> keys;
  std::vector<double> quotas;
  for (const auto& [s, v] : strata) {
    keys.push_back(s);
    quotas.push_back(static_cast<double>(cap) * static_cast<double>(v.size()) /
                     static_cast<double>(members.size()));
  }
  // Largest remainder over however many strata exist.
  std::vector<std::size_t> take(keys.size());
  std::size_t assigned = 0;
  std::vector<std::size_t> order(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) {
    take[i] = static_cast<std::size_t>(std::floor(quotas[i] + 1e-9));
    assigned += take[i];
    order[i] = i;
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return quotas[a] - std::floor(quotas[a] + 1e-9) > quotas[b] - std::floor(quotas[b] + 1e-9) + 1e-12;
  });
  for (std::size_t k = 0; assigned < cap; ++k, ++assigned) ++take[order[k % order.size()]];

  std::vector<bool> keep(m.records.size(), true);
  for (auto i : members) keep[i] = false;
  for (std::size_t s = 0; s < keys.size(); ++s) {
    auto pool = strata[keys[s]];
    CounterRng rng(seed, stable_hash(label), 0x756e6400u + static_cast<std::uint32_t>(keys[s]));
    shuffle_with(pool, rng);
    for (std::size_t c = 0; c < take[s]; ++c) keep[pool[c]] = true;
  }
  DatasetManifest out = m;
  out.records.clear();
  for (std::size_t i = 0; i < m.records.size(); ++i) {
    if (keep[i]) out.records.push_back(m.records[i]);
  }
  return out;
}

std::string_view violation_name(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::kMissingFile: return "missing_file";
    case ViolationKind::kDuplicatePath: return "duplicate_path";
    case ViolationKind::kUnknownLabel: return "unknown_label";
    case ViolationKind::kEmptySplit: return "empty_split";
  }
  return "violation";
}

std::vector<Violation> validate_manifest(const DatasetManifest& m) {
  std::vector<Violation> out;
  std::map<std::string, std::size_t> seen;
  for (const auto& r : m.records) ++seen[r.path];
  std::set<std::string> reported;
  for (const auto& r : m.records) {
    if (seen[r.path] > 1 && reported.insert(r.path).second) {
      out.push_back({ViolationKind::kDuplicatePath,
                     r.path + " appears " + std::to_string(seen[r.path]) + " times"});
    }
  }
  for (const auto& r : m.records) {
    if (!fs::exists(m.resolve(r))) out.push_back({ViolationKind::kMissingFile, r.path});
  }
  if (!m.label_space.empty()) {
    for (const auto& r : m.records) {
      if (std::find(m.label_space.begin(), m.label_space.end(), r.label) == m.label_space.end()) {
        out.push_back({ViolationKind::kUnknownLabel, r.path + " has label '" + r.label + "'"});
      }
    }
  }
  const bool any_split = std::any_of(m.records.begin(), m.records.end(),
                                     [](const auto& r) { return r.split != Split::kUnassigned; });
  if (any_split) {
    for (const auto& label : DatasetManifest::derive_labels(m.records)) {
      for (Split s : {Split::kTrain, Split::kVal, Split::kTest}) {
        const bool present = std::any_of(m.records.begin(), m.records.end(), [&](const auto& r) {
          return r.label == label && r.split == s;
        });
        if (!present) {
          out.push_back({ViolationKind::kEmptySplit,
                         "class '" + label + "' has no " + std::string(split_name(s)) + " records"});
        }
      }
    }
  }
  return out;
}

}  // namespace sid
