#include "foram/finetune.hpp"

#include <cmath>

#include "foram/backbone.hpp"
#include "foram/imaging.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace foram {

namespace {

Volume cropped_volume(const SpecimenImage& img, int image_size) {
  if (image_size == kCropSize) return preprocess(img, BackboneKind::builtin_small);
  return to_volume(crop_center(img.pixels, image_size), BackboneKind::builtin_small);
}

}  // namespace

// five 2x2/2 pools: the output grid is floor(size / 32)
int scn_feature_dim_for_size(int image_size) {
  const int cells = image_size / 32;
  return cells * cells * SmallConvNet::kWidths.back();
}

Matrix scn_extract_batch(const SmallConvNet& net, const std::vector<SpecimenImage>& images,
                         int workers, int image_size) {
  int dim = net.feature_dim();
  if (image_size != kCropSize) dim = scn_feature_dim_for_size(image_size);
  Matrix out(static_cast<int>(images.size()), dim);
#ifdef _OPENMP
  if (workers <= 0) workers = omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(workers)
#endif
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::vector<double> features = scn_features(net, cropped_volume(images[i], image_size));
    std::copy(features.begin(), features.end(),
              out.data.begin() + i * static_cast<std::size_t>(out.cols));
  }
  return out;
}

namespace {

double eval_accuracy(const ClassifierParams& head, const Matrix& features,
                     const std::vector<int>& labels) {
  const Matrix probs = nn_forward(head, features, Mode::eval);
  return accuracy(probs, labels);
}

}  // namespace

TrainReport finetune(SmallConvNet& net, ClassifierParams& head, const ImageBatchStream& train,
                     const std::vector<SpecimenImage>& val_images,
                     const std::vector<int>& val_labels,
                     const std::vector<SpecimenImage>* test_images,
                     const std::vector<int>* test_labels, const FinetuneConfig& cfg) {
  const int n_blocks = static_cast<int>(net.blocks.size());
  if (cfg.first_trainable_block < 0 || cfg.first_trainable_block >= n_blocks)
    throw ValidationError("finetune: first_trainable_block out of range");
  if (val_images.empty()) throw ValidationError("finetune: empty validation set");
  if (cfg.image_size < 32 || cfg.image_size > kCropSize)
    throw ValidationError("finetune: image_size must be in [32, 224]");

  Optimizer backbone_opt(cfg.optimizer, cfg.backbone_lr);
  Optimizer head_opt(cfg.optimizer, cfg.head_lr);

  TrainReport report;
  report.initial_val_accuracy =
      eval_accuracy(head, scn_extract_batch(net, val_images, cfg.workers, cfg.image_size), val_labels);
  report.best_val_accuracy = report.initial_val_accuracy;
  report.best_epoch = 0;

  struct Snapshot {
    std::vector<ConvLayer> blocks;  // trainable blocks only
    std::vector<DenseLayer> head;
  };
  auto snapshot = [&] {
    Snapshot s;
    for (int b = cfg.first_trainable_block; b < n_blocks; ++b)
      s.blocks.push_back(net.blocks[static_cast<std::size_t>(b)]);
    s.head = head.layers;
    return s;
  };
  Snapshot best = snapshot();
  int bad_epochs = 0;

  const int steps = train.steps_per_epoch();
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    double loss_sum = 0.0;
    for (int step = 0; step < steps; ++step) {
      const ImageBatch batch = train.batch(epoch, step);
      const int n = static_cast<int>(batch.images.size());

      // forward pass (no caches) to drive the head
      const Matrix features = scn_extract_batch(net, batch.images, cfg.workers, cfg.image_size);

      ForwardCache head_cache;
      Rng dropout_rng(derive_seed(cfg.seed, "dropout", static_cast<std::uint64_t>(epoch),
                                  static_cast<std::uint64_t>(step)));
      const Matrix probs = nn_forward(head, features, Mode::train, &dropout_rng, &head_cache);
      Matrix d_features;
      auto [loss, head_grads] =
          nn_backward_from_cache(head, head_cache, probs, batch.labels, &d_features);
      if (!std::isfinite(loss))
        throw RuntimeFailure("finetune diverged: non-finite loss at epoch " +
                             std::to_string(epoch));
      loss_sum += loss;

      // Re-forward per image with caches and backpropagate into the trainable
      // blocks. Per-image gradients are summed in index order afterwards so
      // results do not depend on thread scheduling. d_features rows already
      // carry the 1/batch factor.
      std::vector<ScnGrads> per_image(static_cast<std::size_t>(n));
      std::exception_ptr failure;
#ifdef _OPENMP
      const int workers = cfg.workers > 0 ? cfg.workers : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(workers)
#endif
      for (int i = 0; i < n; ++i) {
        try {
          ScnCache cache;
          scn_features(net,
                       cropped_volume(batch.images[static_cast<std::size_t>(i)],
                                      cfg.image_size),
                       &cache);
          const auto row = d_features.row(i);
          scn_backward(net, cache, std::vector<double>(row.begin(), row.end()),
                       cfg.first_trainable_block, per_image[static_cast<std::size_t>(i)]);
        } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
          if (!failure) failure = std::current_exception();
        }
      }
      if (failure) std::rethrow_exception(failure);

      ScnGrads total;
      for (const ScnGrads& g : per_image) scn_accumulate(total, g);

      std::vector<std::pair<std::span<double>, std::span<const double>>> backbone_views;
      for (int b = cfg.first_trainable_block; b < n_blocks; ++b) {
        backbone_views.emplace_back(
            std::span<double>(net.blocks[static_cast<std::size_t>(b)].weights),
            std::span<const double>(total.weights[static_cast<std::size_t>(b)]));
        backbone_views.emplace_back(
            std::span<double>(net.blocks[static_cast<std::size_t>(b)].bias),
            std::span<const double>(total.bias[static_cast<std::size_t>(b)]));
      }
      backbone_opt.step(backbone_views);

      std::vector<std::pair<std::span<double>, std::span<const double>>> head_views;
      for (std::size_t l = 0; l < head.layers.size(); ++l) {
        head_views.emplace_back(std::span<double>(head.layers[l].weights),
                                std::span<const double>(head_grads.weights[l]));
        head_views.emplace_back(std::span<double>(head.layers[l].bias),
                                std::span<const double>(head_grads.bias[l]));
      }
      head_opt.step(head_views);
    }
    report.train_loss.push_back(steps > 0 ? loss_sum / steps : 0.0);

    const double val_acc =
        eval_accuracy(head, scn_extract_batch(net, val_images, cfg.workers, cfg.image_size), val_labels);
    report.val_accuracy.push_back(val_acc);
    report.stopped_epoch = epoch;

    if (val_acc > report.best_val_accuracy) {
      report.best_val_accuracy = val_acc;
      report.best_epoch = epoch;
      best = snapshot();
      bad_epochs = 0;
    } else {
      ++bad_epochs;
      if (bad_epochs > cfg.patience) break;
    }
  }

  for (int b = cfg.first_trainable_block; b < n_blocks; ++b)
    net.blocks[static_cast<std::size_t>(b)] =
        best.blocks[static_cast<std::size_t>(b - cfg.first_trainable_block)];
  head.layers = best.head;

  if (test_images && test_labels) {
    report.test_accuracy =
        eval_accuracy(head, scn_extract_batch(net, *test_images, cfg.workers, cfg.image_size), *test_labels);
  }
  return report;
}

}  // namespace foram
