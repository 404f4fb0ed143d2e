#include "foram/augment.hpp"

#include <algorithm>
#include <cmath>

namespace foram {

void rgb_to_hsv(double r, double g, double b, double& h, double& s, double& v) {
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double delta = mx - mn;
  v = mx;
  s = mx > 0.0 ? delta / mx : 0.0;
  if (delta <= 0.0) {
    h = 0.0;
    return;
  }
  if (mx == r)
    h = (g - b) / delta;
  else if (mx == g)
    h = 2.0 + (b - r) / delta;
  else
    h = 4.0 + (r - g) / delta;
  h /= 6.0;
  if (h < 0.0) h += 1.0;
}

void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b) {
  h -= std::floor(h);  // wrap to [0, 1)
  const double hh = h * 6.0;
  const int sector = std::min(5, static_cast<int>(hh));
  const double f = hh - sector;
  const double p = v * (1.0 - s);
  const double q = v * (1.0 - s * f);
  const double t = v * (1.0 - s * (1.0 - f));
  switch (sector) {
    case 0: r = v; g = t; b = p; break;
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = t; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = t; g = p; b = v; break;
    default: r = v; g = p; b = q; break;
  }
}

Image8 hflip_image(const Image8& img) {
  Image8 out(img.height, img.width);
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c)
      for (int ch = 0; ch < 3; ++ch) out.at(r, c, ch) = img.at(r, img.width - 1 - c, ch);
  return out;
}

Image8 rot90_image(const Image8& img, int quarter_turns) {
  const int k = ((quarter_turns % 4) + 4) % 4;
  if (k == 0) return img;
  // counter-clockwise quarter turns
  Image8 out(k % 2 == 0 ? img.height : img.width, k % 2 == 0 ? img.width : img.height);
  for (int r = 0; r < out.height; ++r) {
    for (int c = 0; c < out.width; ++c) {
      int sr = 0, sc = 0;
      switch (k) {
        case 1: sr = c; sc = img.width - 1 - r; break;
        case 2: sr = img.height - 1 - r; sc = img.width - 1 - c; break;
        default: sr = img.height - 1 - c; sc = r; break;
      }
      for (int ch = 0; ch < 3; ++ch) out.at(r, c, ch) = img.at(sr, sc, ch);
    }
  }
  return out;
}

namespace {

inline std::uint8_t clamp_byte(double v) {
  return static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0) + 0.5);
}

inline double luminance(double r, double g, double b) {
  return 0.299 * r + 0.587 * g + 0.114 * b;
}

}  // namespace

Image8 apply_photometric(const Image8& img, double brightness, double contrast,
                         double saturation, double hue_offset) {
  const std::size_t n = static_cast<std::size_t>(img.height) * img.width;
  std::vector<double> px(img.data.begin(), img.data.end());

  if (brightness != 1.0)
    for (double& v : px) v *= brightness;

  if (contrast != 1.0) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      mean += luminance(px[i * 3], px[i * 3 + 1], px[i * 3 + 2]);
    mean /= static_cast<double>(n);
    for (double& v : px) v = mean + (v - mean) * contrast;
  }

  if (saturation != 1.0) {
    for (std::size_t i = 0; i < n; ++i) {
      const double lum = luminance(px[i * 3], px[i * 3 + 1], px[i * 3 + 2]);
      for (int ch = 0; ch < 3; ++ch)
        px[i * 3 + ch] = lum + (px[i * 3 + ch] - lum) * saturation;
    }
  }

  if (hue_offset != 0.0) {
    for (std::size_t i = 0; i < n; ++i) {
      double h, s, v;
      const double r = std::clamp(px[i * 3], 0.0, 255.0) / 255.0;
      const double g = std::clamp(px[i * 3 + 1], 0.0, 255.0) / 255.0;
      const double b = std::clamp(px[i * 3 + 2], 0.0, 255.0) / 255.0;
      rgb_to_hsv(r, g, b, h, s, v);
      double nr, ng, nb;
      hsv_to_rgb(h + hue_offset, s, v, nr, ng, nb);
      px[i * 3] = nr * 255.0;
      px[i * 3 + 1] = ng * 255.0;
      px[i * 3 + 2] = nb * 255.0;
    }
  }

  Image8 out(img.height, img.width);
  for (std::size_t i = 0; i < px.size(); ++i) out.data[i] = clamp_byte(px[i]);
  return out;
}

SpecimenImage augment(const SpecimenImage& img, const AugmentConfig& cfg, Rng& rng) {
  SpecimenImage out = img;
  if (cfg.hflip && rng.bernoulli(0.5)) out.pixels = hflip_image(out.pixels);
  if (cfg.rot90) {
    const int k = rng.uniform_int(4);
    if (k != 0) out.pixels = rot90_image(out.pixels, k);
  }
  const double fb = cfg.brightness_delta > 0.0
                        ? rng.uniform(1.0 - cfg.brightness_delta, 1.0 + cfg.brightness_delta)
                        : 1.0;
  const double fc = cfg.contrast_delta > 0.0
                        ? rng.uniform(1.0 - cfg.contrast_delta, 1.0 + cfg.contrast_delta)
                        : 1.0;
  const double fs = cfg.saturation_delta > 0.0
                        ? rng.uniform(1.0 - cfg.saturation_delta, 1.0 + cfg.saturation_delta)
                        : 1.0;
  const double dh = cfg.hue_delta > 0.0 ? rng.uniform(-cfg.hue_delta, cfg.hue_delta) : 0.0;
  if (fb != 1.0 || fc != 1.0 || fs != 1.0 || dh != 0.0)
    out.pixels = apply_photometric(out.pixels, fb, fc, fs, dh);
  return out;
}

}  // namespace foram
