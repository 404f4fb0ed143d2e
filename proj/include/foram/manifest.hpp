#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "foram/common.hpp"

namespace foram {

struct SpecimenRecord {
  std::string image_path;
  std::string label;
  std::string split = "unassigned";  // train | val | test | unassigned
};

struct DatasetManifest {
  std::vector<SpecimenRecord> records;
  std::uint64_t seed = 0;
  std::vector<std::string> class_names;  // fixed order, index = class id

  int class_id(const std::string& label) const;
  std::vector<std::size_t> split_indices(const std::string& split) const;
};

// Scans data_dir/<class_name>/*.png in sorted order.
DatasetManifest ingest_directory(const std::string& data_dir,
                                 const std::vector<std::string>& class_names,
                                 std::uint64_t seed);

// Per class: seeded shuffle, then floor-based counts with remainders assigned
// train, then val, then test. Requires every record unassigned and at least 3
// records per class.
DatasetManifest stratified_split(const DatasetManifest& manifest,
                                 std::array<double, 3> fractions, std::uint64_t seed);

void save_manifest(const DatasetManifest& manifest, const std::string& path);
DatasetManifest load_manifest(const std::string& path);

}  // namespace foram
