#include "foram/batches.hpp"

#include "foram/png_io.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace foram {

ImageLoader png_loader() {
  return [](const std::string& path) {
    SpecimenImage img;
    img.pixels = read_png(path);
    if (img.pixels.height != kCropSize || img.pixels.width != kCropSize)
      throw RuntimeFailure("specimen image is not 224x224: " + path);
    return img;
  };
}

ImageBatchStream::ImageBatchStream(const DatasetManifest& manifest, std::string split,
                                   int batch_size, int epoch_multiplicity,
                                   AugmentConfig augment_cfg, bool augmented,
                                   std::uint64_t seed, ImageLoader loader)
    : batch_size_(batch_size),
      multiplicity_(augmented ? epoch_multiplicity : 1),
      augment_cfg_(augment_cfg),
      augmented_(augmented),
      seed_(seed),
      loader_(std::move(loader)) {
  if (batch_size <= 0) throw ValidationError("batch size must be positive");
  if (multiplicity_ <= 0) throw ValidationError("epoch multiplicity must be positive");
  indices_ = manifest.split_indices(split);
  if (indices_.empty()) throw ValidationError("empty split: " + split);
  for (std::size_t idx : indices_) {
    paths_.push_back(manifest.records[idx].image_path);
    labels_.push_back(manifest.class_id(manifest.records[idx].label));
  }
}

int ImageBatchStream::steps_per_epoch() const {
  const long samples = static_cast<long>(indices_.size()) * multiplicity_;
  return static_cast<int>((samples + batch_size_ - 1) / batch_size_);
}

std::vector<std::size_t> ImageBatchStream::epoch_order(int epoch) const {
  std::vector<std::size_t> order;
  order.reserve(indices_.size() * static_cast<std::size_t>(multiplicity_));
  for (int pass = 0; pass < multiplicity_; ++pass) {
    std::vector<std::size_t> local(indices_.size());
    for (std::size_t i = 0; i < local.size(); ++i) local[i] = i;
    if (augmented_) {
      Rng rng(derive_seed(seed_, "shuffle", static_cast<std::uint64_t>(epoch),
                          static_cast<std::uint64_t>(pass)));
      rng.shuffle(local);
    }
    order.insert(order.end(), local.begin(), local.end());
  }
  return order;
}

ImageBatch ImageBatchStream::batch(int epoch, int step) const {
  const std::vector<std::size_t> order = epoch_order(epoch);
  const std::size_t begin = static_cast<std::size_t>(step) * batch_size_;
  if (begin >= order.size()) throw ValidationError("batch step out of range");
  const std::size_t end = std::min(order.size(), begin + batch_size_);

  ImageBatch out;
  out.images.resize(end - begin);
  out.labels.resize(end - begin);
  std::exception_ptr failure;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (std::size_t pos = begin; pos < end; ++pos) {
    try {
      const std::size_t local = order[pos];
      SpecimenImage img = loader_(paths_[local]);
      if (augmented_) {
        Rng rng(derive_seed(seed_, "augment", static_cast<std::uint64_t>(epoch), pos));
        img = augment(img, augment_cfg_, rng);
      }
      out.images[pos - begin] = std::move(img);
      out.labels[pos - begin] = labels_[local];
    } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace foram
