#include "foram/imaging.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <limits>

namespace foram {

GrayImage to_grayscale(const Image8& img) {
  GrayImage out(img.height, img.width);
  const std::size_t n = static_cast<std::size_t>(img.height) * img.width;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = img.data[i * 3 + 0];
    const double g = img.data[i * 3 + 1];
    const double b = img.data[i * 3 + 2];
    out.data[i] = (0.299 * r + 0.587 * g + 0.114 * b) / 255.0;
  }
  return out;
}

GrayImage to_grayscale(const Plate& plate) { return to_grayscale(plate.pixels); }

Image8 crop_center(const Image8& img, int size) {
  if (size <= 0 || size > img.height || size > img.width)
    throw ValidationError("crop_center: size exceeds image dimensions");
  const int top = (img.height - size) / 2;
  const int left = (img.width - size) / 2;
  Image8 out(size, size);
  for (int r = 0; r < size; ++r) {
    const std::uint8_t* src =
        img.data.data() + ((static_cast<std::size_t>(top + r) * img.width) + left) * 3;
    std::copy(src, src + static_cast<std::size_t>(size) * 3,
              out.data.data() + static_cast<std::size_t>(r) * size * 3);
  }
  return out;
}

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0)) throw ValidationError("gaussian_kernel: sigma must be positive");
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double w = std::exp(-0.5 * (i * i) / (sigma * sigma));
    k[i + radius] = w;
    sum += w;
  }
  for (double& w : k) w /= sum;
  return k;
}

GrayImage gaussian_blur(const GrayImage& img, double sigma) {
  const std::vector<double> k = gaussian_kernel(sigma);
  const int radius = (static_cast<int>(k.size()) - 1) / 2;
  const int h = img.height, w = img.width;

  GrayImage tmp(h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        const int cc = std::clamp(c + i, 0, w - 1);
        acc += k[i + radius] * img.at(r, cc);
      }
      tmp.at(r, c) = acc;
    }
  }
  GrayImage out(h, w);
  for (int c = 0; c < w; ++c) {
    for (int r = 0; r < h; ++r) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        const int rr = std::clamp(r + i, 0, h - 1);
        acc += k[i + radius] * tmp.at(rr, c);
      }
      out.at(r, c) = acc;
    }
  }
  return out;
}

BinaryMask threshold_fixed(const GrayImage& img, double t) {
  if (t < 0.0 || t > 1.0) throw ValidationError("threshold: fixed value must be in [0, 1]");
  BinaryMask mask(img.height, img.width);
  for (std::size_t i = 0; i < img.data.size(); ++i) mask.data[i] = img.data[i] > t ? 1 : 0;
  return mask;
}

BinaryMask threshold_otsu(const GrayImage& img, double* chosen_t) {
  constexpr int kBins = 256;
  std::array<double, kBins> hist{};
  for (double v : img.data) {
    int bin = static_cast<int>(v * kBins);
    bin = std::clamp(bin, 0, kBins - 1);
    hist[bin] += 1.0;
  }
  const double total = static_cast<double>(img.data.size());
  if (total == 0.0) throw ValidationError("threshold_otsu: empty image");

  double mu_total = 0.0;
  for (int i = 0; i < kBins; ++i) mu_total += (i + 0.5) / kBins * hist[i] / total;

  // Scan split points: class 0 = bins <= k, class 1 = bins > k. Ties keep the
  // lowest k so results match an exhaustive first-maximum search.
  double best_var = 0.0;
  int best_k = -1;
  double w0 = 0.0, mu0_sum = 0.0;
  for (int k = 0; k + 1 < kBins; ++k) {
    w0 += hist[k] / total;
    mu0_sum += (k + 0.5) / kBins * hist[k] / total;
    if (w0 <= 0.0 || w0 >= 1.0) continue;
    const double d = mu_total * w0 - mu0_sum;
    const double var = d * d / (w0 * (1.0 - w0));
    if (var > best_var) {
      best_var = var;
      best_k = k;
    }
  }
  if (best_k < 0 || best_var <= 0.0)
    throw ValidationError("threshold_otsu: degenerate histogram (constant image)");

  const double t = static_cast<double>(best_k + 1) / kBins;
  if (chosen_t) *chosen_t = t;
  return threshold_fixed(img, t);
}

BinaryMask threshold(const GrayImage& img, ThresholdMethod method, double fixed_value,
                     double* chosen_t) {
  if (method == ThresholdMethod::fixed) {
    if (chosen_t) *chosen_t = fixed_value;
    return threshold_fixed(img, fixed_value);
  }
  return threshold_otsu(img, chosen_t);
}

ComponentMap connected_components(const BinaryMask& mask, int connectivity) {
  if (connectivity != 4 && connectivity != 8)
    throw ValidationError("connected_components: connectivity must be 4 or 8");

  const int h = mask.height, w = mask.width;
  ComponentMap cmap(h, w);

  static constexpr int dr8[] = {-1, -1, -1, 0, 0, 1, 1, 1};
  static constexpr int dc8[] = {-1, 0, 1, -1, 1, -1, 0, 1};
  static constexpr int dr4[] = {-1, 0, 0, 1};
  static constexpr int dc4[] = {0, -1, 1, 0};
  const int* dr = connectivity == 8 ? dr8 : dr4;
  const int* dc = connectivity == 8 ? dc8 : dc4;
  const int ndirs = connectivity;

  std::deque<std::pair<int, int>> queue;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (!mask.at(r, c) || cmap.at(r, c) != 0) continue;
      const std::int32_t label = ++cmap.count;
      cmap.at(r, c) = label;
      queue.emplace_back(r, c);
      while (!queue.empty()) {
        const auto [cr, cc] = queue.front();
        queue.pop_front();
        for (int d = 0; d < ndirs; ++d) {
          const int nr = cr + dr[d], nc = cc + dc[d];
          if (nr < 0 || nr >= h || nc < 0 || nc >= w) continue;
          if (!mask.at(nr, nc) || cmap.at(nr, nc) != 0) continue;
          cmap.at(nr, nc) = label;
          queue.emplace_back(nr, nc);
        }
      }
    }
  }
  return cmap;
}

std::vector<Candidate> measure_candidates(const ComponentMap& cmap) {
  std::vector<Candidate> out(static_cast<std::size_t>(cmap.count));
  std::vector<long> min_r(cmap.count, std::numeric_limits<long>::max());
  std::vector<long> min_c(cmap.count, std::numeric_limits<long>::max());
  std::vector<long> max_r(cmap.count, -1), max_c(cmap.count, -1);
  std::vector<double> sum_r(cmap.count, 0.0), sum_c(cmap.count, 0.0);

  for (int r = 0; r < cmap.height; ++r) {
    for (int c = 0; c < cmap.width; ++c) {
      const std::int32_t label = cmap.at(r, c);
      if (label == 0) continue;
      Candidate& cand = out[label - 1];
      cand.area += 1;
      sum_r[label - 1] += r;
      sum_c[label - 1] += c;
      min_r[label - 1] = std::min<long>(min_r[label - 1], r);
      min_c[label - 1] = std::min<long>(min_c[label - 1], c);
      max_r[label - 1] = std::max<long>(max_r[label - 1], r);
      max_c[label - 1] = std::max<long>(max_c[label - 1], c);
    }
  }
  for (int i = 0; i < cmap.count; ++i) {
    Candidate& cand = out[i];
    cand.label = i + 1;
    cand.centroid_row = sum_r[i] / static_cast<double>(cand.area);
    cand.centroid_col = sum_c[i] / static_cast<double>(cand.area);
    cand.top = static_cast<int>(min_r[i]);
    cand.left = static_cast<int>(min_c[i]);
    cand.bbox_height = static_cast<int>(max_r[i] - min_r[i] + 1);
    cand.bbox_width = static_cast<int>(max_c[i] - min_c[i] + 1);
  }
  return out;
}

GrayImage remove_border(const Plate& plate, const DetectConfig& cfg) {
  GrayImage gray = to_grayscale(plate);

  BinaryMask mask;
  try {
    const GrayImage blurred = gaussian_blur(gray, cfg.border_sigma);
    mask = threshold(blurred, cfg.method, cfg.fixed_value);
  } catch (const ValidationError&) {
    return gray;  // constant plate, nothing to remove
  }

  const ComponentMap cmap = connected_components(mask, cfg.connectivity);
  if (cmap.count == 0) return gray;

  // Count distinct image edges each component touches.
  std::vector<std::array<bool, 4>> touches(cmap.count, {false, false, false, false});
  for (int c = 0; c < cmap.width; ++c) {
    if (auto l = cmap.at(0, c)) touches[l - 1][0] = true;
    if (auto l = cmap.at(cmap.height - 1, c)) touches[l - 1][1] = true;
  }
  for (int r = 0; r < cmap.height; ++r) {
    if (auto l = cmap.at(r, 0)) touches[l - 1][2] = true;
    if (auto l = cmap.at(r, cmap.width - 1)) touches[l - 1][3] = true;
  }

  const std::vector<Candidate> cands = measure_candidates(cmap);
  int border_label = 0;
  long border_area = 0;
  for (const Candidate& cand : cands) {
    const auto& t = touches[cand.label - 1];
    const int edges = int(t[0]) + int(t[1]) + int(t[2]) + int(t[3]);
    if (edges >= 2 && cand.area > border_area) {
      border_area = cand.area;
      border_label = cand.label;
    }
  }
  if (border_label == 0) return gray;

  std::vector<double> rest;
  rest.reserve(gray.data.size());
  for (std::size_t i = 0; i < gray.data.size(); ++i)
    if (cmap.labels[i] != border_label) rest.push_back(gray.data[i]);
  if (rest.empty()) return gray;  // border covers the whole plate

  const std::size_t mid = rest.size() / 2;
  std::nth_element(rest.begin(), rest.begin() + mid, rest.end());
  const double median = rest[mid];

  for (std::size_t i = 0; i < gray.data.size(); ++i)
    if (cmap.labels[i] == border_label) gray.data[i] = median;
  return gray;
}

std::vector<Detection> detect_specimens(const Plate& plate, const DetectConfig& cfg) {
  const int h = plate.pixels.height, w = plate.pixels.width;
  if (h < kCropSize || w < kCropSize)
    throw ValidationError("detect_specimens: plate smaller than 224x224");

  GrayImage gray = cfg.border_removal ? remove_border(plate, cfg) : to_grayscale(plate);
  gray = gaussian_blur(gray, cfg.sigma);

  BinaryMask mask;
  try {
    mask = threshold(gray, cfg.method, cfg.fixed_value);
  } catch (const ValidationError&) {
    return {};  // no foreground on a constant plate
  }

  const ComponentMap cmap = connected_components(mask, cfg.connectivity);
  const std::vector<Candidate> cands = measure_candidates(cmap);

  std::vector<Detection> out;
  for (const Candidate& cand : cands) {
    if (cand.area < cfg.min_area) continue;

    int top = static_cast<int>(std::lround(cand.centroid_row)) - kCropSize / 2;
    int left = static_cast<int>(std::lround(cand.centroid_col)) - kCropSize / 2;
    top = std::clamp(top, 0, h - kCropSize);
    left = std::clamp(left, 0, w - kCropSize);

    SpecimenImage spec;
    spec.pixels = Image8(kCropSize, kCropSize);
    spec.source_plate = plate.id;
    spec.centroid_row = cand.centroid_row;
    spec.centroid_col = cand.centroid_col;
    for (int r = 0; r < kCropSize; ++r) {
      const std::uint8_t* src =
          plate.pixels.data.data() + ((static_cast<std::size_t>(top + r) * w) + left) * 3;
      std::copy(src, src + static_cast<std::size_t>(kCropSize) * 3,
                spec.pixels.data.data() + static_cast<std::size_t>(r) * kCropSize * 3);
    }
    out.push_back(Detection{std::move(spec), cand});
  }
  return out;
}

}  // namespace foram
