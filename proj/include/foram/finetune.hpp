#pragma once

#include "foram/batches.hpp"
#include "foram/smallconvnet.hpp"
#include "foram/train.hpp"

namespace foram {

// Joint backbone + head training. The default settings implement
// fine-tuning: only the last two convolutional blocks receive gradient
// updates, at a learning rate far below the head's. Setting
// first_trainable_block to 0 with backbone_lr equal to head_lr turns the same
// loop into from-scratch end-to-end training.
struct FinetuneConfig {
  int first_trainable_block = 3;  // 0-based: blocks 4 and 5 of 5
  double backbone_lr = 1e-7;
  double head_lr = 1e-4;
  OptimizerKind optimizer = OptimizerKind::adam;
  int max_epochs = 20;
  int patience = 3;
  // Images are center-cropped to this size before entering the backbone.
  // Reduced sizes (multiples of 32) make from-scratch pretraining cheap; the
  // learned convolution weights are resolution independent.
  int image_size = 224;
  std::uint64_t seed = 0;
  int workers = 0;
};

// Feature length produced by the builtin topology at a given input size.
int scn_feature_dim_for_size(int image_size);

// Extracts features for a list of images through the current backbone
// weights (eval path, parallel over images), center-cropping to image_size.
Matrix scn_extract_batch(const SmallConvNet& net, const std::vector<SpecimenImage>& images,
                         int workers = 0, int image_size = 224);

// Trains net and head in place with early stopping on validation accuracy;
// parameters outside trainable blocks and the head are never modified.
// Restores the best-validation snapshot (the initial state counts).
TrainReport finetune(SmallConvNet& net, ClassifierParams& head, const ImageBatchStream& train,
                     const std::vector<SpecimenImage>& val_images,
                     const std::vector<int>& val_labels,
                     const std::vector<SpecimenImage>* test_images,
                     const std::vector<int>* test_labels, const FinetuneConfig& cfg);

}  // namespace foram
