#pragma once

#include <cstdint>
#include <vector>

#include "foram/common.hpp"

namespace foram {

// Channel-major (C, H, W) activation volume.
struct Volume {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;

  Volume() = default;
  Volume(int c, int h, int w)
      : channels(c), height(h), width(w),
        data(static_cast<std::size_t>(c) * h * w, 0.0) {}

  double& at(int c, int h, int w) {
    return data[(static_cast<std::size_t>(c) * height + h) * width + w];
  }
  double at(int c, int h, int w) const {
    return data[(static_cast<std::size_t>(c) * height + h) * width + w];
  }
  std::size_t size() const { return data.size(); }
};

struct ConvSpec {
  int kernel_h = 3;
  int kernel_w = 3;
  int stride_h = 1;
  int stride_w = 1;
  int pad_top = 1;
  int pad_left = 1;
  int pad_bottom = 1;
  int pad_right = 1;
};

struct ConvLayer {
  int in_channels = 0;
  int out_channels = 0;
  ConvSpec spec;
  std::vector<double> weights;  // [out][in][kh][kw]
  std::vector<double> bias;     // [out]
};

int conv_output_dim(int input, int kernel, int pad_lo, int pad_hi, int stride);

// im2col + GEMM convolution; zero padding.
Volume conv2d_forward(const ConvLayer& layer, const Volume& input);

// d_input / d_weights / d_bias are optional; pass nullptr to skip.
void conv2d_backward(const ConvLayer& layer, const Volume& input, const Volume& d_out,
                     Volume* d_input, std::vector<double>* d_weights,
                     std::vector<double>* d_bias);

void relu_inplace(Volume& v);
void relu_backward_inplace(const Volume& pre_activation, Volume& d);

struct PoolSpec {
  int kernel = 2;
  int stride = 2;
  int pad = 0;
};

// Max pooling; argmax (flat input index per output element, first maximum in
// scan order) is recorded for the backward pass when non-null.
Volume maxpool_forward(const Volume& input, const PoolSpec& spec,
                       std::vector<std::int64_t>* argmax = nullptr);

Volume maxpool_backward(const Volume& d_out, const Volume& input,
                        const std::vector<std::int64_t>& argmax);

}  // namespace foram
