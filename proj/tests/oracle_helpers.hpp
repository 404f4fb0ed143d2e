// Test-only reference implementations, independent of the production paths
// they check.
#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "foram/conv.hpp"
#include "foram/image.hpp"
#include "foram/nn.hpp"

namespace foram::testing {

// Recursive flood fill (4- or 8-connectivity), labels in raster discovery
// order.
inline void flood_fill_visit(const BinaryMask& mask, std::vector<std::int32_t>& labels, int r,
                             int c, std::int32_t label, int connectivity) {
  if (r < 0 || r >= mask.height || c < 0 || c >= mask.width) return;
  const std::size_t i = static_cast<std::size_t>(r) * mask.width + c;
  if (!mask.data[i] || labels[i] != 0) return;
  labels[i] = label;
  flood_fill_visit(mask, labels, r - 1, c, label, connectivity);
  flood_fill_visit(mask, labels, r + 1, c, label, connectivity);
  flood_fill_visit(mask, labels, r, c - 1, label, connectivity);
  flood_fill_visit(mask, labels, r, c + 1, label, connectivity);
  if (connectivity == 8) {
    flood_fill_visit(mask, labels, r - 1, c - 1, label, connectivity);
    flood_fill_visit(mask, labels, r - 1, c + 1, label, connectivity);
    flood_fill_visit(mask, labels, r + 1, c - 1, label, connectivity);
    flood_fill_visit(mask, labels, r + 1, c + 1, label, connectivity);
  }
}

inline ComponentMap flood_fill_components(const BinaryMask& mask, int connectivity) {
  ComponentMap cmap(mask.height, mask.width);
  for (int r = 0; r < mask.height; ++r)
    for (int c = 0; c < mask.width; ++c)
      if (mask.at(r, c) && cmap.at(r, c) == 0)
        flood_fill_visit(mask, cmap.labels, r, c, ++cmap.count, connectivity);
  return cmap;
}

// Partition equality up to label renaming.
inline bool same_partition(const ComponentMap& a, const ComponentMap& b) {
  if (a.height != b.height || a.width != b.width || a.count != b.count) return false;
  std::vector<std::int32_t> a_to_b(static_cast<std::size_t>(a.count) + 1, 0);
  std::vector<std::int32_t> b_to_a(static_cast<std::size_t>(b.count) + 1, 0);
  for (std::size_t i = 0; i < a.labels.size(); ++i) {
    const std::int32_t la = a.labels[i], lb = b.labels[i];
    if ((la == 0) != (lb == 0)) return false;
    if (la == 0) continue;
    if (a_to_b[la] == 0) a_to_b[la] = lb;
    if (b_to_a[lb] == 0) b_to_a[lb] = la;
    if (a_to_b[la] != lb || b_to_a[lb] != la) return false;
  }
  return true;
}

// Dense 2-D convolution with edge replication (blur oracle).
inline GrayImage dense_convolve(const GrayImage& img, const std::vector<double>& kernel_1d) {
  const int radius = (static_cast<int>(kernel_1d.size()) - 1) / 2;
  GrayImage out(img.height, img.width);
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        for (int j = -radius; j <= radius; ++j) {
          const int rr = std::clamp(r + i, 0, img.height - 1);
          const int cc = std::clamp(c + j, 0, img.width - 1);
          acc += kernel_1d[i + radius] * kernel_1d[j + radius] * img.at(rr, cc);
        }
      }
      out.at(r, c) = acc;
    }
  }
  return out;
}

// Per-neuron scalar forward oracle for the dense head (eval mode).
inline Matrix naive_mlp_forward(const ClassifierParams& params, const Matrix& x) {
  Matrix a = x;
  for (const DenseLayer& layer : params.layers) {
    Matrix z(a.rows, layer.out_dim);
    for (int r = 0; r < a.rows; ++r) {
      for (int j = 0; j < layer.out_dim; ++j) {
        double acc = layer.bias[static_cast<std::size_t>(j)];
        for (int i = 0; i < layer.in_dim; ++i)
          acc += a.at(r, i) * layer.weights[static_cast<std::size_t>(i) * layer.out_dim + j];
        z.at(r, j) = acc;
      }
    }
    if (layer.activation == Activation::relu) {
      for (double& v : z.data) v = std::max(0.0, v);
    } else if (layer.activation == Activation::softmax) {
      for (int r = 0; r < z.rows; ++r) {
        double mx = z.at(r, 0);
        for (int j = 1; j < z.cols; ++j) mx = std::max(mx, z.at(r, j));
        double sum = 0.0;
        for (int j = 0; j < z.cols; ++j) {
          z.at(r, j) = std::exp(z.at(r, j) - mx);
          sum += z.at(r, j);
        }
        for (int j = 0; j < z.cols; ++j) z.at(r, j) /= sum;
      }
    }
    a = std::move(z);
  }
  return a;
}

// Six-loop convolution oracle (zero padding).
inline Volume naive_conv2d(const ConvLayer& layer, const Volume& input) {
  const ConvSpec& s = layer.spec;
  const int oh = conv_output_dim(input.height, s.kernel_h, s.pad_top, s.pad_bottom, s.stride_h);
  const int ow = conv_output_dim(input.width, s.kernel_w, s.pad_left, s.pad_right, s.stride_w);
  Volume out(layer.out_channels, oh, ow);
  for (int co = 0; co < layer.out_channels; ++co) {
    for (int i = 0; i < oh; ++i) {
      for (int j = 0; j < ow; ++j) {
        double acc = layer.bias[static_cast<std::size_t>(co)];
        for (int ci = 0; ci < layer.in_channels; ++ci) {
          for (int ki = 0; ki < s.kernel_h; ++ki) {
            for (int kj = 0; kj < s.kernel_w; ++kj) {
              const int r = i * s.stride_h - s.pad_top + ki;
              const int c = j * s.stride_w - s.pad_left + kj;
              if (r < 0 || r >= input.height || c < 0 || c >= input.width) continue;
              const std::size_t w_idx =
                  ((static_cast<std::size_t>(co) * layer.in_channels + ci) * s.kernel_h + ki) *
                      s.kernel_w +
                  kj;
              acc += layer.weights[w_idx] * input.at(ci, r, c);
            }
          }
        }
        out.at(co, i, j) = acc;
      }
    }
  }
  return out;
}

// Naive window-scan max pooling oracle.
inline Volume naive_maxpool(const Volume& input, int kernel, int stride) {
  const int oh = (input.height - kernel) / stride + 1;
  const int ow = (input.width - kernel) / stride + 1;
  Volume out(input.channels, oh, ow);
  for (int c = 0; c < input.channels; ++c)
    for (int i = 0; i < oh; ++i)
      for (int j = 0; j < ow; ++j) {
        double best = input.at(c, i * stride, j * stride);
        for (int ki = 0; ki < kernel; ++ki)
          for (int kj = 0; kj < kernel; ++kj)
            best = std::max(best, input.at(c, i * stride + ki, j * stride + kj));
        out.at(c, i, j) = best;
      }
  return out;
}

// Central finite differences: returns max relative error between analytic and
// numeric gradients over the given parameter array.
inline double fd_max_rel_error(std::vector<double>& params, const std::vector<double>& analytic,
                               const std::function<double()>& loss_fn, double h = 1e-4) {
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + h;
    const double up = loss_fn();
    params[i] = saved - h;
    const double down = loss_fn();
    params[i] = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(numeric), std::abs(analytic[i]), 1e-8});
    worst = std::max(worst, std::abs(numeric - analytic[i]) / denom);
  }
  return worst;
}

}  // namespace foram::testing
