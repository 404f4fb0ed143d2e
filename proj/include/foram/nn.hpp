#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "foram/common.hpp"
#include "foram/rng.hpp"

namespace foram {

// Row-major dense matrix of doubles.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
  std::span<double> row(int r) { return {data.data() + static_cast<std::size_t>(r) * cols,
                                         static_cast<std::size_t>(cols)}; }
  std::span<const double> row(int r) const {
    return {data.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)};
  }
};

enum class Activation { relu, softmax, none };

struct DenseLayer {
  int in_dim = 0;
  int out_dim = 0;
  Activation activation = Activation::none;
  std::vector<double> weights;  // in_dim x out_dim, row-major
  std::vector<double> bias;     // out_dim
};

enum class Mode { train, eval };

// The classification head: dense layers ending in softmax, with inverted
// dropout after each hidden ReLU layer during training. Defaults follow the
// 25088 -> 512 -> 64 -> 4 architecture.
struct ClassifierParams {
  std::vector<DenseLayer> layers;
  double dropout_rate = 0.5;
  std::uint64_t rng_seed = 0;
  std::vector<std::string> class_names;

  static ClassifierParams make(int in_dim = 25088, std::vector<int> hidden = {512, 64},
                               int n_classes = 4, double dropout_rate = 0.5,
                               std::uint64_t seed = 0);

  int input_dim() const { return layers.front().in_dim; }
  int output_dim() const { return layers.back().out_dim; }
  std::size_t param_count() const;
};

struct ForwardCache {
  Matrix input;
  std::vector<Matrix> pre_activation;           // per layer
  std::vector<Matrix> output;                   // per layer, post dropout
  std::vector<std::vector<std::uint8_t>> drop_mask;  // per hidden layer, batch x units
};

// Softmax rows over the classes; train mode applies inverted dropout driven
// by dropout_rng. Cache is filled when non-null (required for backward).
Matrix nn_forward(const ClassifierParams& params, const Matrix& features, Mode mode,
                  Rng* dropout_rng = nullptr, ForwardCache* cache = nullptr);

struct Gradients {
  std::vector<std::vector<double>> weights;  // matches layer weight layout
  std::vector<std::vector<double>> bias;
};

// Mean cross-entropy with a 1e-12 log clamp.
double cross_entropy(const Matrix& probs, const std::vector<int>& labels);

// Forward + backward in one call; the dropout masks drawn in the forward pass
// are reused exactly in the backward pass.
std::pair<double, Gradients> nn_loss_and_grads(const ClassifierParams& params,
                                               const Matrix& features,
                                               const std::vector<int>& labels, Mode mode,
                                               Rng* dropout_rng);

// Variant reusing an existing forward cache (shared with conv backpropagation
// during fine-tuning). d_input, when non-null, receives the gradient with
// respect to the input features.
std::pair<double, Gradients> nn_backward_from_cache(const ClassifierParams& params,
                                                    const ForwardCache& cache,
                                                    const Matrix& probs,
                                                    const std::vector<int>& labels,
                                                    Matrix* d_input = nullptr);

std::vector<int> argmax_rows(const Matrix& probs);
double accuracy(const Matrix& probs, const std::vector<int>& labels);

Matrix one_hot(const std::vector<int>& labels, int n_classes);
std::vector<int> one_hot_to_labels(const Matrix& one_hot);

}  // namespace foram
