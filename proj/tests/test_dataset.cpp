#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <map>
#include <set>

#include "foram/augment.hpp"
#include "foram/batches.hpp"
#include "foram/imaging.hpp"
#include "foram/manifest.hpp"
#include "foram/synth.hpp"

using namespace foram;

namespace {

DatasetManifest toy_manifest(const std::vector<int>& per_class) {
  DatasetManifest m;
  m.class_names = synth_class_names();
  for (std::size_t cls = 0; cls < per_class.size(); ++cls)
    for (int i = 0; i < per_class[cls]; ++i)
      m.records.push_back(SpecimenRecord{
          "img_" + std::to_string(cls) + "_" + std::to_string(i), m.class_names[cls],
          "unassigned"});
  return m;
}

SpecimenImage uniform_specimen(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  SpecimenImage img;
  img.pixels = Image8(kCropSize, kCropSize);
  for (std::size_t i = 0; i < img.pixels.data.size(); i += 3) {
    img.pixels.data[i] = r;
    img.pixels.data[i + 1] = g;
    img.pixels.data[i + 2] = b;
  }
  return img;
}

std::map<std::string, int> split_counts(const DatasetManifest& m, const std::string& cls) {
  std::map<std::string, int> counts;
  for (const SpecimenRecord& rec : m.records)
    if (rec.label == cls) counts[rec.split] += 1;
  return counts;
}

}  // namespace

TEST_CASE("stratified_split: 10 records per class give 8/1/1") {
  const DatasetManifest manifest = toy_manifest({10, 10, 10, 10});
  const DatasetManifest split = stratified_split(manifest, {0.8, 0.1, 0.1}, 42);
  for (const std::string& cls : split.class_names) {
    auto counts = split_counts(split, cls);
    CHECK(counts["train"] == 8);
    CHECK(counts["val"] == 1);
    CHECK(counts["test"] == 1);
  }
}

TEST_CASE("stratified_split: 2673 records, class proportions within one record") {
  // four class sizes summing to the full dataset size
  const std::vector<int> sizes{950, 760, 590, 373};
  const DatasetManifest manifest = toy_manifest(sizes);
  REQUIRE(manifest.records.size() == 2673);
  const DatasetManifest split = stratified_split(manifest, {0.8, 0.1, 0.1}, 1);

  long total = 0;
  for (std::size_t cls = 0; cls < sizes.size(); ++cls) {
    auto counts = split_counts(split, split.class_names[cls]);
    const long sum = counts["train"] + counts["val"] + counts["test"];
    CHECK(sum == sizes[cls]);
    CHECK(std::abs(counts["train"] - 0.8 * sizes[cls]) <= 1.0);
    total += sum;
  }
  CHECK(total == 2673);

  // every record lands in exactly one split
  for (const SpecimenRecord& rec : split.records) {
    const bool assigned =
        rec.split == "train" || rec.split == "val" || rec.split == "test";
    CHECK(assigned);
  }
}

TEST_CASE("stratified_split: deterministic in the seed") {
  const DatasetManifest manifest = toy_manifest({20, 20, 20, 20});
  const DatasetManifest a = stratified_split(manifest, {0.8, 0.1, 0.1}, 7);
  const DatasetManifest b = stratified_split(manifest, {0.8, 0.1, 0.1}, 7);
  const DatasetManifest c = stratified_split(manifest, {0.8, 0.1, 0.1}, 8);

  bool same_ab = true, same_ac = true;
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    same_ab = same_ab && a.records[i].split == b.records[i].split;
    same_ac = same_ac && a.records[i].split == c.records[i].split;
  }
  CHECK(same_ab);
  CHECK_FALSE(same_ac);  // different permutation

  // per-class counts identical across seeds
  for (const std::string& cls : a.class_names) {
    auto ca = split_counts(a, cls);
    auto cc = split_counts(c, cls);
    CHECK(ca["train"] == cc["train"]);
    CHECK(ca["val"] == cc["val"]);
    CHECK(ca["test"] == cc["test"]);
  }
}

TEST_CASE("stratified_split: errors") {
  DatasetManifest small = toy_manifest({2, 10, 10, 10});
  CHECK_THROWS_AS(stratified_split(small, {0.8, 0.1, 0.1}, 0), ValidationError);

  DatasetManifest assigned = toy_manifest({5, 5, 5, 5});
  assigned.records[0].split = "train";
  CHECK_THROWS_AS(stratified_split(assigned, {0.8, 0.1, 0.1}, 0), ValidationError);

  DatasetManifest ok = toy_manifest({5, 5, 5, 5});
  CHECK_THROWS_AS(stratified_split(ok, {0.7, 0.1, 0.1}, 0), ValidationError);
}

TEST_CASE("manifest JSON round trip") {
  const DatasetManifest manifest =
      stratified_split(toy_manifest({5, 6, 7, 8}), {0.8, 0.1, 0.1}, 3);
  const std::string path =
      (std::filesystem::temp_directory_path() / "foram_manifest_test.json").string();
  save_manifest(manifest, path);
  const DatasetManifest back = load_manifest(path);
  CHECK(back.class_names == manifest.class_names);
  CHECK(back.seed == manifest.seed);
  REQUIRE(back.records.size() == manifest.records.size());
  for (std::size_t i = 0; i < back.records.size(); ++i) {
    CHECK(back.records[i].image_path == manifest.records[i].image_path);
    CHECK(back.records[i].label == manifest.records[i].label);
    CHECK(back.records[i].split == manifest.records[i].split);
  }
  std::filesystem::remove(path);
}

TEST_CASE("augment: all-identity config returns the input bytes") {
  AugmentConfig cfg;
  cfg.hflip = false;
  cfg.rot90 = false;
  cfg.brightness_delta = cfg.contrast_delta = cfg.saturation_delta = cfg.hue_delta = 0.0;
  const SpecimenImage img = uniform_specimen(101, 150, 77);
  Rng rng(1);
  const SpecimenImage out = augment(img, cfg, rng);
  CHECK(out.pixels.data == img.pixels.data);
}

TEST_CASE("augment: four quarter turns give back the original") {
  Rng rng(9);
  Image8 img(kCropSize, kCropSize);
  for (auto& v : img.data) v = static_cast<std::uint8_t>(rng.uniform_int(256));
  Image8 rotated = img;
  for (int k = 0; k < 4; ++k) rotated = rot90_image(rotated, 1);
  CHECK(rotated.data == img.data);
  CHECK(rot90_image(img, 4).data == img.data);

  Image8 flipped = hflip_image(hflip_image(img));
  CHECK(flipped.data == img.data);
}

TEST_CASE("augment: brightness factor 1.10 scales a uniform image, clamps at 255") {
  const SpecimenImage img = uniform_specimen(100, 100, 100);
  const Image8 brighter = apply_photometric(img.pixels, 1.10, 1.0, 1.0, 0.0);
  for (auto v : brighter.data) CHECK(static_cast<int>(v) == 110);

  const SpecimenImage bright = uniform_specimen(250, 250, 250);
  const Image8 clamped = apply_photometric(bright.pixels, 1.10, 1.0, 1.0, 0.0);
  for (auto v : clamped.data) CHECK(static_cast<int>(v) == 255);
}

TEST_CASE("augment: output stays 224x224x3 in [0,255] and dims never change") {
  AugmentConfig cfg;
  const SpecimenImage img = uniform_specimen(120, 60, 200);
  for (int trial = 0; trial < 20; ++trial) {
    Rng rng(derive_seed(4, "augment-trial", trial));
    const SpecimenImage out = augment(img, cfg, rng);
    CHECK(out.pixels.height == kCropSize);
    CHECK(out.pixels.width == kCropSize);
    CHECK(out.pixels.data.size() == img.pixels.data.size());
  }
}

TEST_CASE("rgb<->hsv round trip within one intensity level") {
  Rng rng(23);
  for (int trial = 0; trial < 2000; ++trial) {
    const double r = rng.uniform(), g = rng.uniform(), b = rng.uniform();
    double h, s, v, r2, g2, b2;
    rgb_to_hsv(r, g, b, h, s, v);
    hsv_to_rgb(h, s, v, r2, g2, b2);
    CHECK(std::abs(r - r2) * 255.0 <= 1.0);
    CHECK(std::abs(g - g2) * 255.0 <= 1.0);
    CHECK(std::abs(b - b2) * 255.0 <= 1.0);
  }
}

TEST_CASE("batches: counts, multiplicity and determinism") {
  DatasetManifest manifest = toy_manifest({16, 16, 16, 16});
  for (auto& rec : manifest.records) rec.split = "train";

  int counter = 0;
  std::map<std::string, SpecimenImage> store;
  for (auto& rec : manifest.records) store[rec.image_path] = uniform_specimen(
      static_cast<std::uint8_t>(counter), static_cast<std::uint8_t>(counter), 128), ++counter;
  const ImageLoader loader = [&](const std::string& path) { return store.at(path); };

  SUBCASE("64 records, multiplicity 1 -> 2 batches of 32") {
    const ImageBatchStream stream(manifest, "train", 32, 1, AugmentConfig{}, true, 5, loader);
    CHECK(stream.steps_per_epoch() == 2);
    CHECK(stream.batch(1, 0).images.size() == 32);
    CHECK(stream.batch(1, 1).images.size() == 32);
  }

  SUBCASE("multiplicity 4 yields every record exactly 4 times per epoch") {
    const ImageBatchStream stream(manifest, "train", 32, 4, AugmentConfig{}, true, 5, loader);
    CHECK(stream.steps_per_epoch() == 8);
    std::map<int, int> label_counts;
    for (int step = 0; step < stream.steps_per_epoch(); ++step)
      for (int label : stream.batch(2, step).labels) label_counts[label] += 1;
    for (const auto& [label, count] : label_counts) CHECK(count == 16 * 4);
  }

  SUBCASE("260-step epoch arithmetic: 2138 records x4 at batch 32 -> 268 steps") {
    DatasetManifest big = toy_manifest({535, 535, 534, 534});
    for (auto& rec : big.records) rec.split = "train";
    // no loading happens for steps_per_epoch
    const ImageBatchStream stream(big, "train", 32, 4, AugmentConfig{}, true, 5, loader);
    CHECK(stream.size() == 2138);
    CHECK(stream.steps_per_epoch() == 268);
  }

  SUBCASE("val stream: unaugmented, identical across replays") {
    DatasetManifest val_manifest = manifest;
    for (auto& rec : val_manifest.records) rec.split = "val";
    const ImageBatchStream stream(val_manifest, "val", 32, 4, AugmentConfig{}, false, 5,
                                  loader);
    CHECK(stream.steps_per_epoch() == 2);  // multiplicity forced to 1
    const ImageBatch a = stream.batch(0, 0);
    const ImageBatch b = stream.batch(0, 0);
    CHECK(a.labels == b.labels);
    for (std::size_t i = 0; i < a.images.size(); ++i)
      CHECK(a.images[i].pixels.data == b.images[i].pixels.data);
    // unaugmented content equals the stored image
    CHECK(a.images[0].pixels.data == store.at(val_manifest.records[0].image_path).pixels.data);
  }

  SUBCASE("train stream deterministic by (seed, epoch, step)") {
    const ImageBatchStream s1(manifest, "train", 16, 2, AugmentConfig{}, true, 5, loader);
    const ImageBatchStream s2(manifest, "train", 16, 2, AugmentConfig{}, true, 5, loader);
    const ImageBatch a = s1.batch(3, 5);
    const ImageBatch b = s2.batch(3, 5);
    CHECK(a.labels == b.labels);
    for (std::size_t i = 0; i < a.images.size(); ++i)
      CHECK(a.images[i].pixels.data == b.images[i].pixels.data);
  }

  SUBCASE("empty split errors") {
    CHECK_THROWS_AS(
        ImageBatchStream(manifest, "val", 32, 1, AugmentConfig{}, false, 5, loader),
        ValidationError);
  }
}

TEST_CASE("generate_synthetic: determinism, blank plate, area accuracy") {
  PlateSpec spec;
  spec.blob_count = 5;
  spec.small_blob_count = 1;

  const SynthResult a = generate_synthetic(spec, 77, "p");
  const SynthResult b = generate_synthetic(spec, 77, "p");
  CHECK(a.plate.pixels.data == b.plate.pixels.data);  // byte identical
  CHECK(a.truth.size() == 5);
  CHECK(a.small_truth.size() == 1);

  const SynthResult c = generate_synthetic(spec, 78, "p");
  CHECK(a.plate.pixels.data != c.plate.pixels.data);

  PlateSpec blank;
  blank.blob_count = 0;
  blank.small_blob_count = 0;
  const SynthResult empty = generate_synthetic(blank, 1, "blank");
  CHECK(empty.truth.empty());

  // requested area 2000: rendered component within 10% under default detection
  PlateSpec single;
  single.blob_count = 1;
  single.small_blob_count = 0;
  single.min_blob_area = 2000;
  single.max_blob_area = 2000;
  for (int seed = 0; seed < 8; ++seed) {
    const SynthResult one = generate_synthetic(single, derive_seed(1, "area", seed), "one");
    REQUIRE(one.truth.size() == 1);
    const auto detections = detect_specimens(one.plate, DetectConfig{});
    REQUIRE(detections.size() == 1);
    CHECK(std::abs(detections[0].candidate.area - 2000.0) <= 200.0);
  }
}

TEST_CASE("generate_synthetic: placement failure raises") {
  PlateSpec spec;
  spec.width = 260;
  spec.height = 260;
  spec.blob_count = 60;  // cannot fit
  spec.max_place_retries = 20;
  CHECK_THROWS_AS(generate_synthetic(spec, 3, "full"), RuntimeFailure);
}
