#include "foram/conv.hpp"

#include <algorithm>
#include <limits>

namespace foram {

namespace {

// C(M x N) += A(M x K) * B(K x N)
void gemm_nn(int m, int n, int k, const double* a, const double* b, double* c) {
  for (int i = 0; i < m; ++i) {
    double* crow = c + static_cast<std::size_t>(i) * n;
    const double* arow = a + static_cast<std::size_t>(i) * k;
    for (int p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const double* brow = b + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C(M x K) += A(M x N) * B(K x N)^T
void gemm_nt(int m, int k, int n, const double* a, const double* b, double* c) {
  for (int i = 0; i < m; ++i) {
    const double* arow = a + static_cast<std::size_t>(i) * n;
    double* crow = c + static_cast<std::size_t>(i) * k;
    for (int p = 0; p < k; ++p) {
      const double* brow = b + static_cast<std::size_t>(p) * n;
      double acc = 0.0;
      for (int j = 0; j < n; ++j) acc += arow[j] * brow[j];
      crow[p] += acc;
    }
  }
}

// C(K x N) += A(M x K)^T * B(M x N)
void gemm_tn(int k, int n, int m, const double* a, const double* b, double* c) {
  for (int i = 0; i < m; ++i) {
    const double* arow = a + static_cast<std::size_t>(i) * k;
    const double* brow = b + static_cast<std::size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      double* crow = c + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// cols is (in_ch * kh * kw) x (oh * ow)
void im2col(const Volume& input, const ConvSpec& s, int oh, int ow, std::vector<double>& cols) {
  const int kh = s.kernel_h, kw = s.kernel_w;
  cols.assign(static_cast<std::size_t>(input.channels) * kh * kw * oh * ow, 0.0);
  std::size_t row = 0;
  for (int c = 0; c < input.channels; ++c) {
    for (int ki = 0; ki < kh; ++ki) {
      for (int kj = 0; kj < kw; ++kj, ++row) {
        double* dst = cols.data() + row * static_cast<std::size_t>(oh) * ow;
        for (int i = 0; i < oh; ++i) {
          const int src_r = i * s.stride_h - s.pad_top + ki;
          if (src_r < 0 || src_r >= input.height) {
            dst += ow;
            continue;
          }
          for (int j = 0; j < ow; ++j, ++dst) {
            const int src_c = j * s.stride_w - s.pad_left + kj;
            if (src_c >= 0 && src_c < input.width) *dst = input.at(c, src_r, src_c);
          }
        }
      }
    }
  }
}

void col2im(const std::vector<double>& cols, const ConvSpec& s, int oh, int ow, Volume& out) {
  const int kh = s.kernel_h, kw = s.kernel_w;
  std::size_t row = 0;
  for (int c = 0; c < out.channels; ++c) {
    for (int ki = 0; ki < kh; ++ki) {
      for (int kj = 0; kj < kw; ++kj, ++row) {
        const double* src = cols.data() + row * static_cast<std::size_t>(oh) * ow;
        for (int i = 0; i < oh; ++i) {
          const int dst_r = i * s.stride_h - s.pad_top + ki;
          if (dst_r < 0 || dst_r >= out.height) {
            src += ow;
            continue;
          }
          for (int j = 0; j < ow; ++j, ++src) {
            const int dst_c = j * s.stride_w - s.pad_left + kj;
            if (dst_c >= 0 && dst_c < out.width) out.at(c, dst_r, dst_c) += *src;
          }
        }
      }
    }
  }
}

}  // namespace

int conv_output_dim(int input, int kernel, int pad_lo, int pad_hi, int stride) {
  const int span = input + pad_lo + pad_hi - kernel;
  if (span < 0 || stride <= 0) throw ValidationError("conv: invalid geometry");
  return span / stride + 1;
}

Volume conv2d_forward(const ConvLayer& layer, const Volume& input) {
  if (input.channels != layer.in_channels)
    throw ValidationError("conv2d: input channel mismatch");
  const ConvSpec& s = layer.spec;
  const int oh = conv_output_dim(input.height, s.kernel_h, s.pad_top, s.pad_bottom, s.stride_h);
  const int ow = conv_output_dim(input.width, s.kernel_w, s.pad_left, s.pad_right, s.stride_w);
  const int k = layer.in_channels * s.kernel_h * s.kernel_w;
  const int n = oh * ow;

  std::vector<double> cols;
  im2col(input, s, oh, ow, cols);

  Volume out(layer.out_channels, oh, ow);
  for (int co = 0; co < layer.out_channels; ++co) {
    double* plane = out.data.data() + static_cast<std::size_t>(co) * n;
    std::fill(plane, plane + n, layer.bias[static_cast<std::size_t>(co)]);
  }
  gemm_nn(layer.out_channels, n, k, layer.weights.data(), cols.data(), out.data.data());
  return out;
}

void conv2d_backward(const ConvLayer& layer, const Volume& input, const Volume& d_out,
                     Volume* d_input, std::vector<double>* d_weights,
                     std::vector<double>* d_bias) {
  const ConvSpec& s = layer.spec;
  const int oh = d_out.height, ow = d_out.width;
  const int k = layer.in_channels * s.kernel_h * s.kernel_w;
  const int n = oh * ow;

  if (d_bias) {
    d_bias->assign(layer.bias.size(), 0.0);
    for (int co = 0; co < layer.out_channels; ++co) {
      const double* plane = d_out.data.data() + static_cast<std::size_t>(co) * n;
      double acc = 0.0;
      for (int j = 0; j < n; ++j) acc += plane[j];
      (*d_bias)[static_cast<std::size_t>(co)] += acc;
    }
  }

  std::vector<double> cols;
  if (d_weights) {
    im2col(input, s, oh, ow, cols);
    d_weights->assign(layer.weights.size(), 0.0);
    gemm_nt(layer.out_channels, k, n, d_out.data.data(), cols.data(), d_weights->data());
  }

  if (d_input) {
    std::vector<double> d_cols(static_cast<std::size_t>(k) * n, 0.0);
    gemm_tn(k, n, layer.out_channels, layer.weights.data(), d_out.data.data(), d_cols.data());
    *d_input = Volume(layer.in_channels, input.height, input.width);
    col2im(d_cols, s, oh, ow, *d_input);
  }
}

void relu_inplace(Volume& v) {
  for (double& x : v.data) x = x > 0.0 ? x : 0.0;
}

void relu_backward_inplace(const Volume& pre_activation, Volume& d) {
  for (std::size_t i = 0; i < d.data.size(); ++i)
    if (pre_activation.data[i] <= 0.0) d.data[i] = 0.0;
}

Volume maxpool_forward(const Volume& input, const PoolSpec& spec,
                       std::vector<std::int64_t>* argmax) {
  const int oh = conv_output_dim(input.height, spec.kernel, spec.pad, spec.pad, spec.stride);
  const int ow = conv_output_dim(input.width, spec.kernel, spec.pad, spec.pad, spec.stride);
  Volume out(input.channels, oh, ow);
  if (argmax) argmax->assign(out.size(), -1);

  std::size_t oi = 0;
  for (int c = 0; c < input.channels; ++c) {
    for (int i = 0; i < oh; ++i) {
      for (int j = 0; j < ow; ++j, ++oi) {
        double best = -std::numeric_limits<double>::infinity();
        std::int64_t best_idx = -1;
        for (int ki = 0; ki < spec.kernel; ++ki) {
          const int r = i * spec.stride - spec.pad + ki;
          if (r < 0 || r >= input.height) continue;
          for (int kj = 0; kj < spec.kernel; ++kj) {
            const int col = j * spec.stride - spec.pad + kj;
            if (col < 0 || col >= input.width) continue;
            const double v = input.at(c, r, col);
            if (v > best) {
              best = v;
              best_idx = (static_cast<std::int64_t>(c) * input.height + r) * input.width + col;
            }
          }
        }
        out.data[oi] = best;
        if (argmax) (*argmax)[oi] = best_idx;
      }
    }
  }
  return out;
}

Volume maxpool_backward(const Volume& d_out, const Volume& input,
                        const std::vector<std::int64_t>& argmax) {
  Volume d_input(input.channels, input.height, input.width);
  for (std::size_t i = 0; i < d_out.data.size(); ++i) {
    const std::int64_t idx = argmax[i];
    if (idx >= 0) d_input.data[static_cast<std::size_t>(idx)] += d_out.data[i];
  }
  return d_input;
}

}  // namespace foram
