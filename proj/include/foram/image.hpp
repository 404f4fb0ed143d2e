#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "foram/common.hpp"

namespace foram {

constexpr int kCropSize = 224;

// Interleaved 8-bit RGB, row-major (height, width, channel).
struct Image8 {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> data;

  Image8() = default;
  Image8(int h, int w) : height(h), width(w), data(static_cast<std::size_t>(h) * w * 3, 0) {}

  std::uint8_t& at(int r, int c, int ch) {
    return data[(static_cast<std::size_t>(r) * width + c) * 3 + ch];
  }
  std::uint8_t at(int r, int c, int ch) const {
    return data[(static_cast<std::size_t>(r) * width + c) * 3 + ch];
  }
};

// Full microscope plate photograph.
struct Plate {
  Image8 pixels;
  std::string id;
};

// Real-valued intensities in [0, 1].
struct GrayImage {
  int height = 0;
  int width = 0;
  std::vector<double> data;

  GrayImage() = default;
  GrayImage(int h, int w) : height(h), width(w), data(static_cast<std::size_t>(h) * w, 0.0) {}

  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * width + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * width + c]; }
};

struct BinaryMask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> data;  // 0 background, 1 foreground

  BinaryMask() = default;
  BinaryMask(int h, int w) : height(h), width(w), data(static_cast<std::size_t>(h) * w, 0) {}

  std::uint8_t& at(int r, int c) { return data[static_cast<std::size_t>(r) * width + c]; }
  std::uint8_t at(int r, int c) const { return data[static_cast<std::size_t>(r) * width + c]; }
};

// Labels 1..count over foreground pixels, 0 for background.
struct ComponentMap {
  int height = 0;
  int width = 0;
  std::vector<std::int32_t> labels;
  int count = 0;

  ComponentMap() = default;
  ComponentMap(int h, int w)
      : height(h), width(w), labels(static_cast<std::size_t>(h) * w, 0) {}

  std::int32_t& at(int r, int c) { return labels[static_cast<std::size_t>(r) * width + c]; }
  std::int32_t at(int r, int c) const { return labels[static_cast<std::size_t>(r) * width + c]; }
};

struct Candidate {
  int label = 0;
  long area = 0;
  double centroid_row = 0.0;
  double centroid_col = 0.0;
  int top = 0;
  int left = 0;
  int bbox_height = 0;
  int bbox_width = 0;
};

// Fixed 224x224x3 crop anchored at a candidate centroid.
struct SpecimenImage {
  Image8 pixels;
  std::string source_plate;
  double centroid_row = 0.0;
  double centroid_col = 0.0;
};

}  // namespace foram
