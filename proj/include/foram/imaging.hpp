#pragma once

#include <optional>
#include <vector>

#include "foram/image.hpp"

namespace foram {

enum class ThresholdMethod { fixed, otsu };

struct DetectConfig {
  double border_sigma = 2.0;   // blur for the border-removal pass
  double sigma = 1.0;          // blur for the specimen pass
  ThresholdMethod method = ThresholdMethod::otsu;
  double fixed_value = 0.5;    // used when method == fixed
  int connectivity = 8;        // 4 or 8
  long min_area = 1024;        // candidates below this are discarded
  bool border_removal = true;
};

// Rec. 601 luminance, scaled to [0, 1].
GrayImage to_grayscale(const Plate& plate);
GrayImage to_grayscale(const Image8& img);

// Central size x size window; size must not exceed either dimension.
Image8 crop_center(const Image8& img, int size);

// Normalized 1-D Gaussian, radius ceil(3*sigma). Exposed for tests.
std::vector<double> gaussian_kernel(double sigma);

// Separable convolution with edge replication at the borders.
GrayImage gaussian_blur(const GrayImage& img, double sigma);

BinaryMask threshold_fixed(const GrayImage& img, double t);

// Picks the threshold among 256 uniform bins maximizing between-class
// variance. Throws ValidationError on a degenerate (single-bin) histogram.
BinaryMask threshold_otsu(const GrayImage& img, double* chosen_t = nullptr);

BinaryMask threshold(const GrayImage& img, ThresholdMethod method, double fixed_value,
                     double* chosen_t = nullptr);

// Labels maximal connected foreground regions 1..count in raster-scan
// discovery order.
ComponentMap connected_components(const BinaryMask& mask, int connectivity);

// Area, binary centroid and tight bbox per label, ordered by label.
std::vector<Candidate> measure_candidates(const ComponentMap& cmap);

// First detection pass: finds the largest thresholded component touching at
// least two image edges and replaces it with the median of the remaining
// pixels. Returns the grayscale plate unchanged when no such component
// exists.
GrayImage remove_border(const Plate& plate, const DetectConfig& cfg);

struct Detection {
  SpecimenImage image;
  Candidate candidate;
};

// Full pipeline: border removal, blur, threshold, connected components,
// candidate measurement, area filter, 224x224 crops of the original color
// plate clamped inside its bounds.
std::vector<Detection> detect_specimens(const Plate& plate, const DetectConfig& cfg);

}  // namespace foram
