#include "foram/feature_cache.hpp"

#include <cstring>
#include <filesystem>

#include <json.hpp>

#include "foram/rng.hpp"
#include "foram/util.hpp"

namespace foram {

namespace {
constexpr char kMagic[8] = {'F', 'O', 'R', 'A', 'M', 'F', 'C', '1'};
}

std::uint64_t feature_cache_key(std::uint64_t backbone_hash, std::uint64_t manifest_hash,
                                std::uint64_t augment_hash, int train_variants,
                                std::uint64_t seed) {
  std::uint64_t h = backbone_hash;
  h = fnv1a64(&manifest_hash, sizeof(manifest_hash), h);
  h = fnv1a64(&augment_hash, sizeof(augment_hash), h);
  h = fnv1a64(&train_variants, sizeof(train_variants), h);
  h = fnv1a64(&seed, sizeof(seed), h);
  return h;
}

void save_feature_cache(const std::string& path, std::uint64_t key,
                        const FeatureSections& sections) {
  nlohmann::json header;
  header["format_version"] = 1;
  header["key"] = key;
  header["dim"] = sections.dim;
  header["train_variants"] = sections.train_variants;
  header["train_rows"] = sections.train.rows;
  header["val_rows"] = sections.val.rows;
  header["test_rows"] = sections.test.rows;
  const std::string header_str = header.dump();

  std::string bytes;
  bytes.append(kMagic, sizeof(kMagic));
  const std::uint32_t len = static_cast<std::uint32_t>(header_str.size());
  bytes.append(reinterpret_cast<const char*>(&len), 4);
  bytes.append(header_str);
  for (const Matrix* m : {&sections.train, &sections.val, &sections.test}) {
    const std::size_t offset = bytes.size();
    bytes.resize(offset + m->data.size() * sizeof(double));
    std::memcpy(bytes.data() + offset, m->data.data(), m->data.size() * sizeof(double));
  }
  write_file_atomic(path, bytes);
}

std::optional<FeatureSections> load_feature_cache(const std::string& path,
                                                  std::uint64_t key) {
  if (!std::filesystem::exists(path)) return std::nullopt;
  const std::string bytes = read_file(path);
  if (bytes.size() < sizeof(kMagic) + 4 ||
      std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
    return std::nullopt;
  std::uint32_t len = 0;
  std::memcpy(&len, bytes.data() + sizeof(kMagic), 4);
  if (bytes.size() < sizeof(kMagic) + 4 + len) return std::nullopt;

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(sizeof(kMagic) + 4, len));
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
  if (header.value("format_version", 0) != 1) return std::nullopt;
  if (header.value("key", std::uint64_t{0}) != key) return std::nullopt;

  FeatureSections sections;
  sections.dim = header.at("dim").get<int>();
  sections.train_variants = header.at("train_variants").get<int>();
  sections.train = Matrix(header.at("train_rows").get<int>(), sections.dim);
  sections.val = Matrix(header.at("val_rows").get<int>(), sections.dim);
  sections.test = Matrix(header.at("test_rows").get<int>(), sections.dim);

  std::size_t cursor = sizeof(kMagic) + 4 + len;
  for (Matrix* m : {&sections.train, &sections.val, &sections.test}) {
    const std::size_t want = m->data.size() * sizeof(double);
    if (cursor + want > bytes.size()) return std::nullopt;
    std::memcpy(m->data.data(), bytes.data() + cursor, want);
    cursor += want;
  }
  return sections;
}

}  // namespace foram
