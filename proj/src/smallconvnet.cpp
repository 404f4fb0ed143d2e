#include "foram/smallconvnet.hpp"

#include <cmath>

#include "foram/rng.hpp"

namespace foram {

SmallConvNet SmallConvNet::init(std::uint64_t seed) {
  SmallConvNet net;
  net.init_seed = seed;
  Rng rng(derive_seed(seed, "backbone-init"));
  int in_ch = 3;
  for (int b = 0; b < kBlockCount; ++b) {
    ConvLayer layer;
    layer.in_channels = in_ch;
    layer.out_channels = kWidths[static_cast<std::size_t>(b)];
    layer.spec = ConvSpec{};  // 3x3, stride 1, same padding
    const double std_dev = std::sqrt(2.0 / (in_ch * 9.0));
    layer.weights.resize(static_cast<std::size_t>(layer.out_channels) * in_ch * 9);
    for (double& w : layer.weights) w = std_dev * rng.normal();
    layer.bias.assign(static_cast<std::size_t>(layer.out_channels), 0.0);
    in_ch = layer.out_channels;
    net.blocks.push_back(std::move(layer));
  }
  return net;
}

int SmallConvNet::feature_dim() const {
  // 224 halves five times to 7
  return 7 * 7 * blocks.back().out_channels;
}

std::size_t SmallConvNet::param_count() const {
  std::size_t n = 0;
  for (const ConvLayer& b : blocks) n += b.weights.size() + b.bias.size();
  return n;
}

std::vector<double> scn_features(const SmallConvNet& net, const Volume& input,
                                 ScnCache* cache) {
  if (cache) {
    cache->input = input;
    cache->blocks.assign(static_cast<std::size_t>(SmallConvNet::kBlockCount), {});
  }
  Volume x = input;
  const PoolSpec pool{};
  for (std::size_t b = 0; b < net.blocks.size(); ++b) {
    Volume z = conv2d_forward(net.blocks[b], x);
    if (cache) cache->blocks[b].pre_relu = z;
    relu_inplace(z);
    if (cache) cache->blocks[b].post_relu = z;
    std::vector<std::int64_t> argmax;
    x = maxpool_forward(z, pool, cache ? &argmax : nullptr);
    if (cache) {
      cache->blocks[b].pool_argmax = std::move(argmax);
      cache->blocks[b].pooled = x;
    }
  }

  // flatten in (height, width, channel) order
  std::vector<double> features(x.size());
  std::size_t f = 0;
  for (int h = 0; h < x.height; ++h)
    for (int w = 0; w < x.width; ++w)
      for (int c = 0; c < x.channels; ++c) features[f++] = x.at(c, h, w);
  return features;
}

void scn_backward(const SmallConvNet& net, const ScnCache& cache,
                  const std::vector<double>& d_features, int first_trainable_block,
                  ScnGrads& grads) {
  const int n_blocks = static_cast<int>(net.blocks.size());
  grads.weights.assign(static_cast<std::size_t>(n_blocks), {});
  grads.bias.assign(static_cast<std::size_t>(n_blocks), {});

  const Volume& top = cache.blocks.back().pooled;
  Volume d(top.channels, top.height, top.width);
  std::size_t f = 0;
  for (int h = 0; h < top.height; ++h)
    for (int w = 0; w < top.width; ++w)
      for (int c = 0; c < top.channels; ++c) d.at(c, h, w) = d_features[f++];

  for (int b = n_blocks - 1; b >= first_trainable_block; --b) {
    const ScnBlockCache& bc = cache.blocks[static_cast<std::size_t>(b)];
    Volume d_pre = maxpool_backward(d, bc.post_relu, bc.pool_argmax);
    relu_backward_inplace(bc.pre_relu, d_pre);

    const Volume& below = b == 0 ? cache.input : cache.blocks[static_cast<std::size_t>(b - 1)].pooled;
    const bool need_input_grad = b > first_trainable_block;
    Volume d_below;
    conv2d_backward(net.blocks[static_cast<std::size_t>(b)], below, d_pre,
                    need_input_grad ? &d_below : nullptr,
                    &grads.weights[static_cast<std::size_t>(b)],
                    &grads.bias[static_cast<std::size_t>(b)]);
    if (need_input_grad) d = std::move(d_below);
  }
}

void scn_accumulate(ScnGrads& into, const ScnGrads& add) {
  if (into.weights.empty()) {
    into = add;
    return;
  }
  for (std::size_t b = 0; b < add.weights.size(); ++b) {
    if (add.weights[b].empty()) continue;
    if (into.weights[b].empty()) {
      into.weights[b] = add.weights[b];
      into.bias[b] = add.bias[b];
      continue;
    }
    for (std::size_t i = 0; i < add.weights[b].size(); ++i)
      into.weights[b][i] += add.weights[b][i];
    for (std::size_t i = 0; i < add.bias[b].size(); ++i) into.bias[b][i] += add.bias[b][i];
  }
}

void scn_scale(ScnGrads& grads, double factor) {
  for (auto& w : grads.weights)
    for (double& v : w) v *= factor;
  for (auto& b : grads.bias)
    for (double& v : b) v *= factor;
}

}  // namespace foram
