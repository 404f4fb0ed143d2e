#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "foram/image.hpp"

namespace foram {

// Parameters for one synthetic plate. The four procedural classes are
// visually distinct: ringed disks, speckled ellipses, lobed chambers and
// angular grain clusters. tint_strength and texture_contrast tune how
// separable the classes are; noise_level roughens the background.
struct PlateSpec {
  int width = 800;
  int height = 600;
  int blob_count = 12;        // specimens at or above the detection size
  int small_blob_count = 2;   // sub-threshold particulates (noise)
  long min_blob_area = 1400;
  long max_blob_area = 3000;
  long small_blob_area = 500;
  double noise_level = 0.015;
  double tint_strength = 1.0;
  double texture_contrast = 1.0;
  int border_px = 14;         // metallic border width, 0 disables it
  int margin = 26;            // keep-out between border and blobs
  int min_separation = 22;    // gap between blob footprints
  int max_place_retries = 2000;
};

struct TruthBlob {
  int class_id = 0;
  double centroid_row = 0.0;
  double centroid_col = 0.0;
  long area = 0;  // painted pixel count
};

struct SynthResult {
  Plate plate;
  std::vector<TruthBlob> truth;  // only blobs at or above the size threshold
  std::vector<TruthBlob> small_truth;
};

// Renders non-overlapping procedural specimens onto a noisy background with
// an optional bright border. Deterministic in (spec, seed). Throws
// RuntimeFailure when blobs cannot be placed within max_place_retries.
SynthResult generate_synthetic(const PlateSpec& spec, std::uint64_t seed,
                               const std::string& plate_id);

const std::vector<std::string>& synth_class_names();

}  // namespace foram
