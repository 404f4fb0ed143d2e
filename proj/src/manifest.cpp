#include "foram/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "foram/rng.hpp"
#include "foram/util.hpp"

namespace fs = std::filesystem;

namespace foram {

int DatasetManifest::class_id(const std::string& label) const {
  for (std::size_t i = 0; i < class_names.size(); ++i)
    if (class_names[i] == label) return static_cast<int>(i);
  throw ValidationError("unknown class label: " + label);
}

std::vector<std::size_t> DatasetManifest::split_indices(const std::string& split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < records.size(); ++i)
    if (records[i].split == split) out.push_back(i);
  return out;
}

DatasetManifest ingest_directory(const std::string& data_dir,
                                 const std::vector<std::string>& class_names,
                                 std::uint64_t seed) {
  DatasetManifest manifest;
  manifest.seed = seed;
  manifest.class_names = class_names;
  for (const std::string& cls : class_names) {
    const fs::path dir = fs::path(data_dir) / cls;
    if (!fs::is_directory(dir)) continue;
    std::vector<std::string> paths;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".png")
        paths.push_back(entry.path().string());
    }
    std::sort(paths.begin(), paths.end());
    for (std::string& p : paths)
      manifest.records.push_back(SpecimenRecord{std::move(p), cls, "unassigned"});
  }
  return manifest;
}

DatasetManifest stratified_split(const DatasetManifest& manifest,
                                 std::array<double, 3> fractions, std::uint64_t seed) {
  const double sum = fractions[0] + fractions[1] + fractions[2];
  if (std::abs(sum - 1.0) > 1e-9)
    throw ValidationError("stratified_split: fractions must sum to 1");
  for (const SpecimenRecord& rec : manifest.records)
    if (rec.split != "unassigned")
      throw ValidationError("stratified_split: record already assigned: " + rec.image_path);

  DatasetManifest out = manifest;
  out.seed = seed;

  static const char* kSplits[3] = {"train", "val", "test"};
  for (std::size_t cls = 0; cls < manifest.class_names.size(); ++cls) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < manifest.records.size(); ++i)
      if (manifest.records[i].label == manifest.class_names[cls]) idx.push_back(i);
    if (idx.size() < 3)
      throw ValidationError("stratified_split: class '" + manifest.class_names[cls] +
                            "' has fewer than 3 records");

    Rng rng(derive_seed(seed, "split", cls));
    rng.shuffle(idx);

    const auto n = static_cast<long>(idx.size());
    std::array<long, 3> counts{};
    for (int s = 0; s < 3; ++s)
      counts[s] = static_cast<long>(std::floor(fractions[s] * static_cast<double>(n)));
    long remainder = n - (counts[0] + counts[1] + counts[2]);
    for (int s = 0; s < 3 && remainder > 0; ++s, --remainder) counts[s] += 1;

    std::size_t cursor = 0;
    for (int s = 0; s < 3; ++s)
      for (long k = 0; k < counts[s]; ++k) out.records[idx[cursor++]].split = kSplits[s];
  }
  return out;
}

void save_manifest(const DatasetManifest& manifest, const std::string& path) {
  nlohmann::json j;
  j["class_names"] = manifest.class_names;
  j["seed"] = manifest.seed;
  auto& records = j["records"] = nlohmann::json::array();
  for (const SpecimenRecord& rec : manifest.records)
    records.push_back({{"path", rec.image_path}, {"label", rec.label}, {"split", rec.split}});
  write_file_atomic(path, j.dump(2) + "\n");
}

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RuntimeFailure("cannot open manifest: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw RuntimeFailure("malformed manifest " + path + ": " + e.what());
  }
  DatasetManifest manifest;
  manifest.class_names = j.at("class_names").get<std::vector<std::string>>();
  manifest.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& rec : j.at("records")) {
    manifest.records.push_back(SpecimenRecord{rec.at("path").get<std::string>(),
                                              rec.at("label").get<std::string>(),
                                              rec.at("split").get<std::string>()});
  }
  for (const SpecimenRecord& rec : manifest.records) manifest.class_id(rec.label);
  return manifest;
}

}  // namespace foram
