#pragma once

#include <functional>
#include <string>
#include <vector>

#include "foram/augment.hpp"
#include "foram/image.hpp"
#include "foram/manifest.hpp"

namespace foram {

struct ImageBatch {
  std::vector<SpecimenImage> images;
  std::vector<int> labels;
};

using ImageLoader = std::function<SpecimenImage(const std::string& path)>;

ImageLoader png_loader();

// Deterministic batch access: content depends only on (seed, epoch, step).
// Training streams shuffle per pass and augment every image independently per
// sampling; eval streams iterate in manifest order, unaugmented, with
// multiplicity 1.
class ImageBatchStream {
 public:
  ImageBatchStream(const DatasetManifest& manifest, std::string split, int batch_size,
                   int epoch_multiplicity, AugmentConfig augment_cfg, bool augmented,
                   std::uint64_t seed, ImageLoader loader = png_loader());

  int steps_per_epoch() const;
  ImageBatch batch(int epoch, int step) const;

  int size() const { return static_cast<int>(indices_.size()); }
  int batch_size() const { return batch_size_; }
  const std::vector<int>& labels() const { return labels_; }
  const std::vector<std::string>& paths() const { return paths_; }

 private:
  std::vector<std::size_t> epoch_order(int epoch) const;

  std::vector<std::size_t> indices_;
  std::vector<std::string> paths_;
  std::vector<int> labels_;
  int batch_size_;
  int multiplicity_;
  AugmentConfig augment_cfg_;
  bool augmented_;
  std::uint64_t seed_;
  ImageLoader loader_;
};

}  // namespace foram
