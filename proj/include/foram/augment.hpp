#pragma once

#include "foram/image.hpp"
#include "foram/rng.hpp"

namespace foram {

struct AugmentConfig {
  bool hflip = true;
  bool rot90 = true;
  double brightness_delta = 0.10;
  double contrast_delta = 0.10;
  double saturation_delta = 0.10;
  double hue_delta = 0.05;
};

// h, s, v in [0, 1); hue wraps on the unit circle.
void rgb_to_hsv(double r, double g, double b, double& h, double& s, double& v);
void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b);

Image8 hflip_image(const Image8& img);
Image8 rot90_image(const Image8& img, int quarter_turns);

// Brightness/contrast/saturation are multiplicative factors; hue_offset is a
// fraction of the hue circle. Factors of exactly 1 (offset 0) leave pixel
// bytes untouched.
Image8 apply_photometric(const Image8& img, double brightness, double contrast,
                         double saturation, double hue_offset);

// Samples flip, quarter-turn rotation and photometric factors from rng and
// applies them. Output stays 224x224x3 with channel values in [0, 255].
SpecimenImage augment(const SpecimenImage& img, const AugmentConfig& cfg, Rng& rng);

}  // namespace foram
