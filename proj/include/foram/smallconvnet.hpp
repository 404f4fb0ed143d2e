#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "foram/conv.hpp"

namespace foram {

// Trainable desk-scale backbone: five blocks of one 3x3 same-padding
// convolution + ReLU + 2x2 max-pool, mirroring the pretrained topology at
// reduced width. 224x224x3 input flattens to 7 * 7 * 32 = 1568 features in
// (height, width, channel) order.
struct SmallConvNet {
  static constexpr int kBlockCount = 5;
  static constexpr std::array<int, 5> kWidths{8, 16, 32, 32, 32};

  std::vector<ConvLayer> blocks;
  std::uint64_t init_seed = 0;

  static SmallConvNet init(std::uint64_t seed);

  int feature_dim() const;
  std::size_t param_count() const;
};

struct ScnBlockCache {
  Volume pre_relu;
  Volume post_relu;
  std::vector<std::int64_t> pool_argmax;
  Volume pooled;
};

struct ScnCache {
  Volume input;
  std::vector<ScnBlockCache> blocks;
};

// Forward pass; fills cache when non-null (needed for backward).
std::vector<double> scn_features(const SmallConvNet& net, const Volume& input,
                                 ScnCache* cache = nullptr);

struct ScnGrads {
  std::vector<std::vector<double>> weights;  // per block; empty when frozen
  std::vector<std::vector<double>> bias;
};

// Backpropagates d_features down to (and including) first_trainable_block;
// blocks below it receive no gradients and are never touched.
void scn_backward(const SmallConvNet& net, const ScnCache& cache,
                  const std::vector<double>& d_features, int first_trainable_block,
                  ScnGrads& grads);

void scn_accumulate(ScnGrads& into, const ScnGrads& add);
void scn_scale(ScnGrads& grads, double factor);

}  // namespace foram
