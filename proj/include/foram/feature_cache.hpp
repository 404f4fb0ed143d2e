#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "foram/nn.hpp"

namespace foram {

// Cached backbone outputs for one manifest. The train block holds
// `train_variants` augmented variants per record (row = record * variants +
// v); val and test hold one clean row per record, in split order.
struct FeatureSections {
  int dim = 0;
  int train_variants = 1;
  Matrix train;
  Matrix val;
  Matrix test;
};

// Cache files are keyed by backbone content, manifest content, augmentation
// settings, multiplicity and seed; any change forces re-extraction.
std::uint64_t feature_cache_key(std::uint64_t backbone_hash, std::uint64_t manifest_hash,
                                std::uint64_t augment_hash, int train_variants,
                                std::uint64_t seed);

void save_feature_cache(const std::string& path, std::uint64_t key,
                        const FeatureSections& sections);

// Returns nothing when the file is absent or was written under another key.
std::optional<FeatureSections> load_feature_cache(const std::string& path,
                                                  std::uint64_t key);

}  // namespace foram
