#include "foram/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "foram/common.hpp"
#include "foram/rng.hpp"

namespace foram {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kBackground = 0.17;

// Local blob raster: intensity in [0,1] where mask is set, centered stamp.
struct Stamp {
  int size = 0;
  std::vector<double> intensity;
  std::vector<std::uint8_t> mask;

  explicit Stamp(int s)
      : size(s),
        intensity(static_cast<std::size_t>(s) * s, 0.0),
        mask(static_cast<std::size_t>(s) * s, 0) {}

  void set(int r, int c, double v) {
    if (r < 0 || r >= size || c < 0 || c >= size) return;
    const std::size_t i = static_cast<std::size_t>(r) * size + c;
    mask[i] = 1;
    intensity[i] = v;
  }
  long painted() const {
    long n = 0;
    for (auto m : mask) n += m;
    return n;
  }
};

// class 0: disk with concentric bright/dark rings and a wavy outline
Stamp render_ringed_disk(double radius, double tc, Rng& rng) {
  const double wobble_phase = rng.uniform(0.0, 2.0 * kPi);
  const double ring_phase = rng.uniform(0.0, 2.0 * kPi);
  const double period = std::max(3.5, radius / 2.5);
  const int size = static_cast<int>(std::ceil(radius * 2.4)) | 1;
  const double mid = size / 2.0;

  Stamp s(size);
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      const double dy = r - mid, dx = c - mid;
      const double rad = std::sqrt(dx * dx + dy * dy);
      const double theta = std::atan2(dy, dx);
      const double edge = radius * (1.0 + 0.06 * std::sin(3.0 * theta + wobble_phase));
      if (rad > edge) continue;
      const double v = 0.74 + tc * 0.18 * std::cos(2.0 * kPi * rad / period + ring_phase);
      s.set(r, c, v);
    }
  }
  return s;
}

// class 1: rotated ellipse with dark speckles
Stamp render_speckled_ellipse(double radius, double tc, Rng& rng) {
  const double theta = rng.uniform(0.0, kPi);
  const double aspect = rng.uniform(1.25, 1.5);
  const double a = radius * aspect, b = radius / aspect;
  const int size = static_cast<int>(std::ceil(a * 2.2)) | 1;
  const double mid = size / 2.0;
  const double ct = std::cos(theta), st = std::sin(theta);
  const std::uint64_t speckle_seed = rng.next_u64();

  Stamp s(size);
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      const double dy = r - mid, dx = c - mid;
      const double u = dx * ct + dy * st;
      const double v = -dx * st + dy * ct;
      if ((u * u) / (a * a) + (v * v) / (b * b) > 1.0) continue;
      std::uint64_t h = speckle_seed ^ (static_cast<std::uint64_t>(r) << 32 |
                                        static_cast<std::uint64_t>(c));
      const double noise = static_cast<double>(splitmix64(h) >> 11) * 0x1.0p-53;
      double val = 0.78 + tc * 0.06 * (noise - 0.5);
      if (noise < 0.28) val = 0.78 - tc * 0.24;  // speckle dot
      s.set(r, c, val);
    }
  }
  return s;
}

// class 2: union of overlapping round chambers with a smooth mottle
Stamp render_lobed_chambers(double radius, double tc, Rng& rng) {
  const int lobes = 3 + rng.uniform_int(3);
  const double lobe_r = radius / std::sqrt(static_cast<double>(lobes)) * 1.18;
  const double orbit = lobe_r * 0.95;
  const double phase = rng.uniform(0.0, 2.0 * kPi);
  const double ma = rng.uniform(0.35, 0.75), mb = rng.uniform(0.35, 0.75);
  const double pa = rng.uniform(0.0, 2.0 * kPi), pb = rng.uniform(0.0, 2.0 * kPi);

  std::vector<std::array<double, 3>> centers;  // row, col, radius
  for (int k = 0; k < lobes; ++k) {
    const double ang = phase + 2.0 * kPi * k / lobes;
    const double scale = rng.uniform(0.85, 1.15);
    centers.push_back({orbit * std::sin(ang), orbit * std::cos(ang), lobe_r * scale});
  }

  const int size = static_cast<int>(std::ceil((orbit + lobe_r * 1.2) * 2.2)) | 1;
  const double mid = size / 2.0;
  Stamp s(size);
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      const double dy = r - mid, dx = c - mid;
      bool inside = false;
      for (const auto& lc : centers) {
        const double ddy = dy - lc[0], ddx = dx - lc[1];
        if (ddy * ddy + ddx * ddx <= lc[2] * lc[2]) {
          inside = true;
          break;
        }
      }
      if (!inside) continue;
      const double mottle = std::sin(ma * dx + pa) * std::sin(mb * dy + pb);
      s.set(r, c, 0.66 + tc * 0.06 * mottle);
    }
  }
  return s;
}

// class 3: cluster of flat-shaded convex shards
Stamp render_grain_cluster(double radius, double tc, Rng& rng) {
  const int shards = 4 + rng.uniform_int(4);
  const double shard_r = radius / std::sqrt(static_cast<double>(shards)) * 1.15;

  struct Shard {
    double row, col, rot, radius, value;
    int verts;
  };
  std::vector<Shard> placed;
  for (int k = 0; k < shards; ++k) {
    Shard sh;
    sh.verts = 3 + rng.uniform_int(3);
    sh.rot = rng.uniform(0.0, 2.0 * kPi);
    sh.radius = shard_r * rng.uniform(0.8, 1.2);
    sh.value = 0.55 + tc * 0.33 * rng.uniform();
    if (placed.empty()) {
      sh.row = 0.0;
      sh.col = 0.0;
    } else {
      const Shard& anchor = placed[static_cast<std::size_t>(rng.uniform_int(
          static_cast<int>(placed.size())))];
      const double ang = rng.uniform(0.0, 2.0 * kPi);
      const double dist = (anchor.radius + sh.radius) * 0.55;
      sh.row = anchor.row + dist * std::sin(ang);
      sh.col = anchor.col + dist * std::cos(ang);
    }
    placed.push_back(sh);
  }

  double extent = 0.0;
  for (const Shard& sh : placed)
    extent = std::max(extent, std::hypot(sh.row, sh.col) + sh.radius);
  const int size = static_cast<int>(std::ceil(extent * 2.2)) | 1;
  const double mid = size / 2.0;

  Stamp s(size);
  for (const Shard& sh : placed) {
    // convex polygon: point is inside when on the inner side of every edge
    std::vector<std::array<double, 2>> poly;
    for (int v = 0; v < sh.verts; ++v) {
      const double ang = sh.rot + 2.0 * kPi * v / sh.verts;
      poly.push_back({sh.row + sh.radius * std::sin(ang), sh.col + sh.radius * std::cos(ang)});
    }
    double lo_r = 1e9, hi_r = -1e9, lo_c = 1e9, hi_c = -1e9;
    for (const auto& p : poly) {
      lo_r = std::min(lo_r, p[0]);
      hi_r = std::max(hi_r, p[0]);
      lo_c = std::min(lo_c, p[1]);
      hi_c = std::max(hi_c, p[1]);
    }
    for (int r = static_cast<int>(std::floor(lo_r + mid)); r <= std::ceil(hi_r + mid); ++r) {
      for (int c = static_cast<int>(std::floor(lo_c + mid)); c <= std::ceil(hi_c + mid); ++c) {
        const double py = r - mid, px = c - mid;
        bool inside = true;
        for (std::size_t v = 0; v < poly.size() && inside; ++v) {
          const auto& p0 = poly[v];
          const auto& p1 = poly[(v + 1) % poly.size()];
          const double cross =
              (p1[1] - p0[1]) * (py - p0[0]) - (p1[0] - p0[0]) * (px - p0[1]);
          inside = cross >= 0.0;
        }
        if (inside) s.set(r, c, sh.value);
      }
    }
  }
  return s;
}

Stamp render_class(int class_id, double radius, double tc, std::uint64_t seed) {
  Rng rng(seed);
  switch (class_id) {
    case 0: return render_ringed_disk(radius, tc, rng);
    case 1: return render_speckled_ellipse(radius, tc, rng);
    case 2: return render_lobed_chambers(radius, tc, rng);
    default: return render_grain_cluster(radius, tc, rng);
  }
}

// Re-render once with a corrected radius so the painted area lands near the
// requested one (painted count scales ~ radius^2).
Stamp render_with_area(int class_id, long target_area, double tc, std::uint64_t seed) {
  double radius = std::sqrt(static_cast<double>(target_area) / kPi);
  Stamp s = render_class(class_id, radius, tc, seed);
  for (int pass = 0; pass < 2; ++pass) {
    const long painted = s.painted();
    if (painted <= 0) break;
    const double ratio = static_cast<double>(target_area) / static_cast<double>(painted);
    if (std::abs(ratio - 1.0) < 0.03) break;
    radius *= std::sqrt(ratio);
    s = render_class(class_id, radius, tc, seed);
  }
  return s;
}

const std::array<std::array<double, 3>, 4> kTints{{
    {1.20, 1.00, 0.72},  // planktic: warm amber
    {0.88, 1.00, 1.18},  // calcareous benthic: cool white
    {1.30, 0.92, 0.58},  // agglutinated benthic: brown
    {1.00, 1.00, 1.00},  // sediment: neutral gray
}};

}  // namespace

const std::vector<std::string>& synth_class_names() {
  static const std::vector<std::string> names{"planktic", "calcareous_benthic",
                                              "agglutinated_benthic", "sediment"};
  return names;
}

SynthResult generate_synthetic(const PlateSpec& spec, std::uint64_t seed,
                               const std::string& plate_id) {
  if (spec.width < kCropSize || spec.height < kCropSize)
    throw ValidationError("generate_synthetic: plate must be at least 224x224");
  if (spec.blob_count < 0 || spec.small_blob_count < 0)
    throw ValidationError("generate_synthetic: negative blob count");

  Rng rng(derive_seed(seed, "synth-plate"));

  SynthResult result;
  result.plate.id = plate_id;
  Image8& img = result.plate.pixels;
  img = Image8(spec.height, spec.width);

  // background with mild pixel noise
  for (int r = 0; r < spec.height; ++r) {
    for (int c = 0; c < spec.width; ++c) {
      const double v = kBackground + spec.noise_level * rng.normal();
      const auto byte = static_cast<std::uint8_t>(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5);
      img.at(r, c, 0) = byte;
      img.at(r, c, 1) = byte;
      img.at(r, c, 2) = byte;
    }
  }

  // metallic border
  if (spec.border_px > 0) {
    for (int r = 0; r < spec.height; ++r) {
      for (int c = 0; c < spec.width; ++c) {
        const bool edge = r < spec.border_px || r >= spec.height - spec.border_px ||
                          c < spec.border_px || c >= spec.width - spec.border_px;
        if (!edge) continue;
        const double v = 0.78 + 0.04 * rng.normal();
        img.at(r, c, 0) = static_cast<std::uint8_t>(std::clamp(v * 0.95, 0.0, 1.0) * 255.0 + 0.5);
        img.at(r, c, 1) = static_cast<std::uint8_t>(std::clamp(v * 0.97, 0.0, 1.0) * 255.0 + 0.5);
        img.at(r, c, 2) = static_cast<std::uint8_t>(std::clamp(v * 1.02, 0.0, 1.0) * 255.0 + 0.5);
      }
    }
  }

  // balanced class assignment for the full-size blobs (rotated so remainders
  // even out across plates), independent draw for the small particulates
  const int total = spec.blob_count + spec.small_blob_count;
  std::vector<int> classes(static_cast<std::size_t>(total));
  const int start = rng.uniform_int(4);
  std::vector<int> big(static_cast<std::size_t>(spec.blob_count));
  for (int i = 0; i < spec.blob_count; ++i) big[static_cast<std::size_t>(i)] = (start + i) % 4;
  rng.shuffle(big);
  std::copy(big.begin(), big.end(), classes.begin());
  for (int i = spec.blob_count; i < total; ++i)
    classes[static_cast<std::size_t>(i)] = rng.uniform_int(4);

  struct Placed {
    double row, col, radius;
  };
  std::vector<Placed> placed;
  const int keepout = spec.border_px + spec.margin;

  // fix every blob's target and render seed up front, then place the largest
  // footprints first (greatly improves packing success)
  std::vector<long> targets(static_cast<std::size_t>(total));
  std::vector<std::uint64_t> render_seeds(static_cast<std::size_t>(total));
  for (int i = 0; i < total; ++i) {
    const bool small = i >= spec.blob_count;
    long target = spec.small_blob_area;
    if (!small) {
      target = spec.min_blob_area;
      if (spec.max_blob_area > spec.min_blob_area)
        target += static_cast<long>(rng.uniform_int(
            static_cast<int>(spec.max_blob_area - spec.min_blob_area + 1)));
    } else {
      target = static_cast<long>(target * rng.uniform(0.8, 1.2));
    }
    targets[static_cast<std::size_t>(i)] = target;
    render_seeds[static_cast<std::size_t>(i)] = rng.next_u64();
  }
  std::vector<int> placement_order(static_cast<std::size_t>(total));
  for (int i = 0; i < total; ++i) placement_order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(placement_order.begin(), placement_order.end(),
                   [&](int a, int b) {
                     return targets[static_cast<std::size_t>(a)] >
                            targets[static_cast<std::size_t>(b)];
                   });

  result.truth.resize(static_cast<std::size_t>(spec.blob_count));
  result.small_truth.resize(static_cast<std::size_t>(spec.small_blob_count));
  for (const int i : placement_order) {
    const bool small = i >= spec.blob_count;
    const long target = targets[static_cast<std::size_t>(i)];
    const int class_id = classes[static_cast<std::size_t>(i)];
    const Stamp stamp = render_with_area(class_id, target, spec.texture_contrast,
                                         render_seeds[static_cast<std::size_t>(i)]);
    const double stamp_radius = stamp.size / 2.0;

    bool ok = false;
    double row = 0.0, col = 0.0;
    for (int attempt = 0; attempt < spec.max_place_retries && !ok; ++attempt) {
      const double lo_r = keepout + stamp_radius;
      const double hi_r = spec.height - keepout - stamp_radius;
      const double lo_c = keepout + stamp_radius;
      const double hi_c = spec.width - keepout - stamp_radius;
      if (hi_r <= lo_r || hi_c <= lo_c) break;
      row = rng.uniform(lo_r, hi_r);
      col = rng.uniform(lo_c, hi_c);
      ok = true;
      for (const Placed& p : placed) {
        const double need = p.radius + stamp_radius + spec.min_separation;
        if (std::hypot(row - p.row, col - p.col) < need) {
          ok = false;
          break;
        }
      }
    }
    if (!ok)
      throw RuntimeFailure("generate_synthetic: could not place blob " + std::to_string(i) +
                           " without overlap on plate " + plate_id);
    placed.push_back({row, col, stamp_radius});

    // composite with per-class tint and collect the exact footprint
    const auto& tint = kTints[static_cast<std::size_t>(class_id)];
    const double ts = spec.tint_strength;
    double sum_r = 0.0, sum_c = 0.0;
    long painted = 0;
    const int top = static_cast<int>(std::lround(row - stamp_radius));
    const int left = static_cast<int>(std::lround(col - stamp_radius));
    for (int r = 0; r < stamp.size; ++r) {
      for (int c = 0; c < stamp.size; ++c) {
        const std::size_t si = static_cast<std::size_t>(r) * stamp.size + c;
        if (!stamp.mask[si]) continue;
        const int pr = top + r, pc = left + c;
        if (pr < 0 || pr >= spec.height || pc < 0 || pc >= spec.width) continue;
        const double base = stamp.intensity[si];
        for (int ch = 0; ch < 3; ++ch) {
          const double mul = 1.0 + (tint[static_cast<std::size_t>(ch)] - 1.0) * ts;
          img.at(pr, pc, ch) =
              static_cast<std::uint8_t>(std::clamp(base * mul, 0.0, 1.0) * 255.0 + 0.5);
        }
        sum_r += pr;
        sum_c += pc;
        ++painted;
      }
    }

    TruthBlob truth;
    truth.class_id = class_id;
    truth.area = painted;
    truth.centroid_row = painted > 0 ? sum_r / painted : row;
    truth.centroid_col = painted > 0 ? sum_c / painted : col;
    if (small)
      result.small_truth[static_cast<std::size_t>(i - spec.blob_count)] = truth;
    else
      result.truth[static_cast<std::size_t>(i)] = truth;
  }
  return result;
}

}  // namespace foram
