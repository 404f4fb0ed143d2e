#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "foram/imaging.hpp"
#include "foram/png_io.hpp"
#include "foram/rng.hpp"
#include "foram/synth.hpp"
#include "oracle_helpers.hpp"

using namespace foram;

namespace {

Plate uniform_plate(int h, int w, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  Plate plate;
  plate.id = "uniform";
  plate.pixels = Image8(h, w);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      plate.pixels.at(i, j, 0) = r;
      plate.pixels.at(i, j, 1) = g;
      plate.pixels.at(i, j, 2) = b;
    }
  return plate;
}

}  // namespace

TEST_CASE("to_grayscale: black, white and pure red") {
  const GrayImage black = to_grayscale(uniform_plate(4, 5, 0, 0, 0));
  for (double v : black.data) CHECK(v == 0.0);

  const GrayImage white = to_grayscale(uniform_plate(4, 5, 255, 255, 255));
  for (double v : white.data) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));

  const GrayImage red = to_grayscale(uniform_plate(1, 1, 255, 0, 0));
  CHECK(red.at(0, 0) == doctest::Approx(0.299).epsilon(1e-12));
}

TEST_CASE("gaussian_kernel: normalized, rejects non-positive sigma") {
  const std::vector<double> k = gaussian_kernel(1.0);
  CHECK(k.size() == 7);  // radius ceil(3*1) = 3
  double sum = 0.0;
  for (double w : k) sum += w;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  CHECK_THROWS_AS(gaussian_kernel(0.0), ValidationError);
  CHECK_THROWS_AS(gaussian_kernel(-1.0), ValidationError);
}

TEST_CASE("gaussian_blur: constant image is unchanged") {
  GrayImage img(16, 16);
  for (double& v : img.data) v = 0.37;
  const GrayImage out = gaussian_blur(img, 2.5);
  for (double v : out.data) CHECK(v == doctest::Approx(0.37).epsilon(1e-9));
}

TEST_CASE("gaussian_blur: impulse response equals kernel center weight") {
  GrayImage img(9, 9);
  img.at(4, 4) = 1.0;
  const std::vector<double> k = gaussian_kernel(1.0);
  const GrayImage out = gaussian_blur(img, 1.0);
  const double center = k[3] * k[3];
  CHECK(out.at(4, 4) == doctest::Approx(center).epsilon(1e-12));
}

TEST_CASE("gaussian_blur: matches the dense convolution oracle") {
  Rng rng(11);
  GrayImage img(17, 13);
  for (double& v : img.data) v = rng.uniform();
  const GrayImage fast = gaussian_blur(img, 1.3);
  const GrayImage slow = testing::dense_convolve(img, gaussian_kernel(1.3));
  for (std::size_t i = 0; i < img.data.size(); ++i)
    CHECK(fast.data[i] == doctest::Approx(slow.data[i]).epsilon(1e-12));
}

TEST_CASE("gaussian_blur: preserves the mean of interior-dominated images") {
  Rng rng(5);
  const double sigma = 1.5;
  const int radius = static_cast<int>(std::ceil(3 * sigma));
  GrayImage img(64, 64);
  for (double& v : img.data) v = 0.5;
  for (int r = radius + 1; r < 64 - radius - 1; ++r)
    for (int c = radius + 1; c < 64 - radius - 1; ++c) img.at(r, c) = rng.uniform(0.2, 0.8);

  double before = 0.0, after = 0.0;
  const GrayImage out = gaussian_blur(img, sigma);
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    before += img.data[i];
    after += out.data[i];
  }
  CHECK(after / img.data.size() ==
        doctest::Approx(before / img.data.size()).epsilon(1e-6));
}

TEST_CASE("threshold fixed: comparisons and monotonicity") {
  GrayImage img(2, 2);
  img.at(0, 0) = 0.1;
  img.at(0, 1) = 0.9;
  img.at(1, 0) = 0.6;
  img.at(1, 1) = 0.2;

  const BinaryMask mask = threshold_fixed(img, 0.5);
  CHECK(mask.at(0, 0) == 0);
  CHECK(mask.at(0, 1) == 1);
  CHECK(mask.at(1, 0) == 1);
  CHECK(mask.at(1, 1) == 0);

  GrayImage zeros(3, 3);
  const BinaryMask empty = threshold_fixed(zeros, 0.5);
  for (auto v : empty.data) CHECK(v == 0);

  // raising t never adds foreground
  Rng rng(3);
  GrayImage noise(12, 12);
  for (double& v : noise.data) v = rng.uniform();
  for (double t = 0.0; t < 1.0; t += 0.13) {
    const BinaryMask lo = threshold_fixed(noise, t);
    const BinaryMask hi = threshold_fixed(noise, std::min(1.0, t + 0.11));
    for (std::size_t i = 0; i < lo.data.size(); ++i)
      if (hi.data[i]) CHECK(lo.data[i]);
  }
}

TEST_CASE("threshold otsu: bimodal separation matches exhaustive search") {
  GrayImage img(10, 10);
  for (int r = 0; r < 10; ++r)
    for (int c = 0; c < 10; ++c) img.at(r, c) = r < 5 ? 0.2 : 0.8;

  double chosen = 0.0;
  const BinaryMask mask = threshold_otsu(img, &chosen);
  CHECK(chosen > 0.2);
  CHECK(chosen < 0.8);
  for (int r = 0; r < 10; ++r)
    for (int c = 0; c < 10; ++c) CHECK(mask.at(r, c) == (r < 5 ? 0 : 1));

  // exhaustive oracle over the 256 candidate thresholds, computed on the
  // actual pixel values
  double best_var = -1.0, best_t = 0.0;
  const double n = 100.0;
  for (int k = 0; k < 256; ++k) {
    const double t = (k + 1) / 256.0;
    double n1 = 0.0, sum0 = 0.0, sum1 = 0.0;
    for (double v : img.data) (v > t ? (n1 += 1, sum1 += v) : (sum0 += v));
    const double n0 = n - n1;
    if (n0 == 0.0 || n1 == 0.0) continue;
    const double d = sum0 / n0 - sum1 / n1;
    const double var = (n0 / n) * (n1 / n) * d * d;
    if (var > best_var) {
      best_var = var;
      best_t = t;
    }
  }
  const BinaryMask oracle = threshold_fixed(img, best_t);
  for (std::size_t i = 0; i < mask.data.size(); ++i) CHECK(mask.data[i] == oracle.data[i]);
}

TEST_CASE("threshold otsu: constant image raises a degenerate-histogram error") {
  GrayImage img(6, 6);
  for (double& v : img.data) v = 0.42;
  CHECK_THROWS_AS(threshold_otsu(img), ValidationError);
}

TEST_CASE("connected_components: singleton and diagonal connectivity") {
  BinaryMask single(5, 5);
  single.at(2, 2) = 1;
  CHECK(connected_components(single, 8).count == 1);

  BinaryMask diag(4, 4);
  diag.at(1, 1) = 1;
  diag.at(2, 2) = 1;
  CHECK(connected_components(diag, 4).count == 2);
  CHECK(connected_components(diag, 8).count == 1);
}

TEST_CASE("connected_components: labels in raster discovery order") {
  BinaryMask mask(3, 7);
  mask.at(0, 5) = 1;  // discovered first
  mask.at(2, 0) = 1;
  mask.at(2, 1) = 1;
  const ComponentMap cmap = connected_components(mask, 8);
  CHECK(cmap.count == 2);
  CHECK(cmap.at(0, 5) == 1);
  CHECK(cmap.at(2, 0) == 2);
}

TEST_CASE("connected_components: randomized masks match the flood-fill oracle") {
  for (int trial = 0; trial < 50; ++trial) {
    Rng rng(derive_seed(99, "cc-trial", trial));
    const int h = 8 + rng.uniform_int(57);
    const int w = 8 + rng.uniform_int(57);
    BinaryMask mask(h, w);
    const double density = rng.uniform(0.2, 0.7);
    for (auto& v : mask.data) v = rng.bernoulli(density) ? 1 : 0;
    for (int connectivity : {4, 8}) {
      const ComponentMap fast = connected_components(mask, connectivity);
      const ComponentMap oracle = testing::flood_fill_components(mask, connectivity);
      CHECK(testing::same_partition(fast, oracle));
    }
  }
}

TEST_CASE("measure_candidates: solid square, L-shape, single pixel") {
  BinaryMask mask(8, 10);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) mask.at(r, c) = 1;
  ComponentMap cmap = connected_components(mask, 8);
  std::vector<Candidate> cands = measure_candidates(cmap);
  REQUIRE(cands.size() == 1);
  CHECK(cands[0].area == 16);
  CHECK(cands[0].centroid_row == doctest::Approx(1.5));
  CHECK(cands[0].centroid_col == doctest::Approx(1.5));
  CHECK(cands[0].bbox_height == 4);
  CHECK(cands[0].bbox_width == 4);

  BinaryMask ell(6, 6);
  ell.at(0, 0) = ell.at(1, 0) = ell.at(2, 0) = ell.at(2, 1) = 1;
  cands = measure_candidates(connected_components(ell, 8));
  REQUIRE(cands.size() == 1);
  CHECK(cands[0].area == 4);
  CHECK(cands[0].centroid_row == doctest::Approx(1.25));
  CHECK(cands[0].centroid_col == doctest::Approx(0.25));

  BinaryMask one(8, 9);
  one.at(5, 7) = 1;
  cands = measure_candidates(connected_components(one, 4));
  REQUIRE(cands.size() == 1);
  CHECK(cands[0].area == 1);
  CHECK(cands[0].centroid_row == doctest::Approx(5.0));
  CHECK(cands[0].centroid_col == doctest::Approx(7.0));
}

TEST_CASE("measure_candidates: areas sum to the foreground pixel count") {
  Rng rng(17);
  BinaryMask mask(48, 40);
  for (auto& v : mask.data) v = rng.bernoulli(0.4) ? 1 : 0;
  const ComponentMap cmap = connected_components(mask, 8);
  long total = 0;
  for (const Candidate& c : measure_candidates(cmap)) total += c.area;
  long foreground = 0;
  for (auto v : mask.data) foreground += v;
  CHECK(total == foreground);
}

TEST_CASE("remove_border: bright frame replaced by field median") {
  Plate plate = uniform_plate(260, 300, 40, 40, 40);
  // bright 10 px frame
  for (int r = 0; r < 260; ++r)
    for (int c = 0; c < 300; ++c)
      if (r < 10 || r >= 250 || c < 10 || c >= 290)
        for (int ch = 0; ch < 3; ++ch) plate.pixels.at(r, c, ch) = 220;

  DetectConfig cfg;
  const GrayImage out = remove_border(plate, cfg);
  const double field = 40.0 / 255.0;
  CHECK(out.at(0, 0) == doctest::Approx(field).epsilon(1e-6));
  CHECK(out.at(259, 299) == doctest::Approx(field).epsilon(1e-6));
  CHECK(out.at(130, 150) == doctest::Approx(field).epsilon(1e-6));
}

TEST_CASE("remove_border: borderless and constant plates pass through") {
  Plate plate = uniform_plate(240, 240, 50, 50, 50);
  // one interior blob, no frame
  for (int r = 100; r < 140; ++r)
    for (int c = 100; c < 140; ++c)
      for (int ch = 0; ch < 3; ++ch) plate.pixels.at(r, c, ch) = 200;

  DetectConfig cfg;
  const GrayImage gray = to_grayscale(plate);
  const GrayImage out = remove_border(plate, cfg);
  for (std::size_t i = 0; i < gray.data.size(); ++i) CHECK(out.data[i] == gray.data[i]);

  const Plate bright = uniform_plate(240, 240, 230, 230, 230);
  const GrayImage bright_out = remove_border(bright, cfg);
  const GrayImage bright_gray = to_grayscale(bright);
  for (std::size_t i = 0; i < bright_gray.data.size(); ++i)
    CHECK(bright_out.data[i] == bright_gray.data[i]);
}

TEST_CASE("detect_specimens: area filter, blank plate, small plate error") {
  PlateSpec spec;
  spec.blob_count = 3;
  spec.small_blob_count = 1;
  spec.small_blob_area = 500;
  const SynthResult synth = generate_synthetic(spec, 21, "det");

  DetectConfig cfg;
  const std::vector<Detection> detections = detect_specimens(synth.plate, cfg);
  CHECK(detections.size() == 3);
  for (const Detection& det : detections) {
    CHECK(det.image.pixels.height == 224);
    CHECK(det.image.pixels.width == 224);
    CHECK(det.candidate.area >= cfg.min_area);
  }

  const Plate blank = uniform_plate(240, 240, 60, 60, 60);
  CHECK(detect_specimens(blank, cfg).empty());

  const Plate tiny = uniform_plate(100, 100, 60, 60, 60);
  CHECK_THROWS_AS(detect_specimens(tiny, cfg), ValidationError);
}

TEST_CASE("detect_specimens: crop window clamps at the plate boundary") {
  Plate plate = uniform_plate(400, 400, 30, 30, 30);
  // blob centered 50 px from the left edge
  for (int r = 180; r < 220; ++r)
    for (int c = 30; c < 70; ++c)
      for (int ch = 0; ch < 3; ++ch) plate.pixels.at(r, c, ch) = 220;

  DetectConfig cfg;
  cfg.border_removal = false;
  const std::vector<Detection> detections = detect_specimens(plate, cfg);
  REQUIRE(detections.size() == 1);
  CHECK(detections[0].image.pixels.width == 224);
  CHECK(detections[0].image.pixels.height == 224);
  // left edge clamped to column 0: the crop's left border contains plate col 0
  CHECK(detections[0].candidate.centroid_col == doctest::Approx(49.5).epsilon(0.05));
}

TEST_CASE("png round trip preserves bytes") {
  Rng rng(7);
  Image8 img(33, 47);
  for (auto& v : img.data) v = static_cast<std::uint8_t>(rng.uniform_int(256));
  const std::string path =
      (std::filesystem::temp_directory_path() / "foram_png_test.png").string();
  write_png(path, img);
  const Image8 back = read_png(path);
  REQUIRE(back.height == img.height);
  REQUIRE(back.width == img.width);
  CHECK(back.data == img.data);
  std::filesystem::remove(path);
}
