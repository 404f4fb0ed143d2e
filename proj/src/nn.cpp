#include "foram/nn.hpp"

#include <algorithm>
#include <cmath>

namespace foram {

namespace {

void check_finite(const Matrix& m, const char* what) {
  for (double v : m.data)
    if (!std::isfinite(v)) throw RuntimeFailure(std::string("non-finite values in ") + what);
}

// out = a x layer.weights + bias, a is batch x in_dim
void dense_forward(const DenseLayer& layer, const Matrix& a, Matrix& out) {
  out = Matrix(a.rows, layer.out_dim);
  for (int r = 0; r < a.rows; ++r) {
    double* dst = out.data.data() + static_cast<std::size_t>(r) * out.cols;
    for (int j = 0; j < layer.out_dim; ++j) dst[j] = layer.bias[j];
    const double* src = a.data.data() + static_cast<std::size_t>(r) * a.cols;
    for (int i = 0; i < layer.in_dim; ++i) {
      const double ai = src[i];
      if (ai == 0.0) continue;
      const double* wrow = layer.weights.data() + static_cast<std::size_t>(i) * layer.out_dim;
      for (int j = 0; j < layer.out_dim; ++j) dst[j] += ai * wrow[j];
    }
  }
}

void softmax_rows(Matrix& m) {
  for (int r = 0; r < m.rows; ++r) {
    auto row = m.row(r);
    const double mx = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double& v : row) {
      v = std::exp(v - mx);
      sum += v;
    }
    for (double& v : row) v /= sum;
  }
}

}  // namespace

ClassifierParams ClassifierParams::make(int in_dim, std::vector<int> hidden, int n_classes,
                                        double dropout_rate, std::uint64_t seed) {
  if (in_dim <= 0 || n_classes <= 0) throw ValidationError("classifier dims must be positive");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0)
    throw ValidationError("dropout rate must be in [0, 1)");

  ClassifierParams params;
  params.dropout_rate = dropout_rate;
  params.rng_seed = seed;

  std::vector<int> dims{in_dim};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(n_classes);

  Rng rng(derive_seed(seed, "init"));
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    DenseLayer layer;
    layer.in_dim = dims[l];
    layer.out_dim = dims[l + 1];
    const bool last = l + 2 == dims.size();
    layer.activation = last ? Activation::softmax : Activation::relu;
    // He-normal for ReLU layers, Glorot-normal for the softmax layer.
    const double std_dev = last ? std::sqrt(2.0 / (layer.in_dim + layer.out_dim))
                                : std::sqrt(2.0 / layer.in_dim);
    layer.weights.resize(static_cast<std::size_t>(layer.in_dim) * layer.out_dim);
    for (double& w : layer.weights) w = std_dev * rng.normal();
    layer.bias.assign(static_cast<std::size_t>(layer.out_dim), 0.0);
    params.layers.push_back(std::move(layer));
  }
  return params;
}

std::size_t ClassifierParams::param_count() const {
  std::size_t n = 0;
  for (const DenseLayer& layer : layers) n += layer.weights.size() + layer.bias.size();
  return n;
}

Matrix nn_forward(const ClassifierParams& params, const Matrix& features, Mode mode,
                  Rng* dropout_rng, ForwardCache* cache) {
  if (features.cols != params.input_dim())
    throw ValidationError("feature dimension mismatch: expected " +
                          std::to_string(params.input_dim()) + ", got " +
                          std::to_string(features.cols));
  check_finite(features, "input features");
  const bool use_dropout = mode == Mode::train && params.dropout_rate > 0.0;
  if (use_dropout && !dropout_rng)
    throw ValidationError("train-mode forward with dropout requires an rng");

  if (cache) {
    cache->input = features;
    cache->pre_activation.clear();
    cache->output.clear();
    cache->drop_mask.clear();
  }

  const double keep = 1.0 - params.dropout_rate;
  Matrix a = features;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const DenseLayer& layer = params.layers[l];
    Matrix z;
    dense_forward(layer, a, z);
    if (cache) cache->pre_activation.push_back(z);

    switch (layer.activation) {
      case Activation::relu:
        for (double& v : z.data) v = v > 0.0 ? v : 0.0;
        break;
      case Activation::softmax:
        softmax_rows(z);
        break;
      case Activation::none:
        break;
    }

    std::vector<std::uint8_t> mask;
    if (layer.activation == Activation::relu && mode == Mode::train) {
      mask.assign(z.data.size(), 1);
      if (use_dropout) {
        // Inverted dropout: kept units scaled by 1/keep so eval needs no
        // correction.
        for (std::size_t i = 0; i < z.data.size(); ++i) {
          if (dropout_rng->uniform() < params.dropout_rate) {
            mask[i] = 0;
            z.data[i] = 0.0;
          } else {
            z.data[i] /= keep;
          }
        }
      }
    }
    if (cache) {
      if (layer.activation == Activation::relu) cache->drop_mask.push_back(std::move(mask));
      cache->output.push_back(z);
    }
    a = std::move(z);
  }
  return a;
}

double cross_entropy(const Matrix& probs, const std::vector<int>& labels) {
  if (static_cast<std::size_t>(probs.rows) != labels.size())
    throw ValidationError("cross_entropy: label count mismatch");
  double loss = 0.0;
  for (int r = 0; r < probs.rows; ++r) {
    const int y = labels[static_cast<std::size_t>(r)];
    if (y < 0 || y >= probs.cols) throw ValidationError("cross_entropy: label out of range");
    loss -= std::log(std::max(probs.at(r, y), 1e-12));
  }
  return loss / probs.rows;
}

std::pair<double, Gradients> nn_backward_from_cache(const ClassifierParams& params,
                                                    const ForwardCache& cache,
                                                    const Matrix& probs,
                                                    const std::vector<int>& labels,
                                                    Matrix* d_input) {
  const double loss = cross_entropy(probs, labels);
  if (!std::isfinite(loss)) throw RuntimeFailure("non-finite loss");

  const int batch = probs.rows;
  const std::size_t n_layers = params.layers.size();
  Gradients grads;
  grads.weights.resize(n_layers);
  grads.bias.resize(n_layers);

  // softmax + cross-entropy: dz = (p - y) / batch
  Matrix delta = probs;
  for (int r = 0; r < batch; ++r) delta.at(r, labels[static_cast<std::size_t>(r)]) -= 1.0;
  for (double& v : delta.data) v /= batch;

  const double keep = 1.0 - params.dropout_rate;
  for (std::size_t l = n_layers; l-- > 0;) {
    const DenseLayer& layer = params.layers[l];
    const Matrix& below = l == 0 ? cache.input : cache.output[l - 1];

    auto& dw = grads.weights[l];
    auto& db = grads.bias[l];
    dw.assign(layer.weights.size(), 0.0);
    db.assign(layer.bias.size(), 0.0);
    for (int r = 0; r < batch; ++r) {
      const double* drow = delta.data.data() + static_cast<std::size_t>(r) * layer.out_dim;
      const double* arow = below.data.data() + static_cast<std::size_t>(r) * layer.in_dim;
      for (int j = 0; j < layer.out_dim; ++j) db[static_cast<std::size_t>(j)] += drow[j];
      for (int i = 0; i < layer.in_dim; ++i) {
        const double ai = arow[i];
        if (ai == 0.0) continue;
        double* wrow = dw.data() + static_cast<std::size_t>(i) * layer.out_dim;
        for (int j = 0; j < layer.out_dim; ++j) wrow[j] += ai * drow[j];
      }
    }

    if (l == 0 && !d_input) break;

    // propagate: d a_{l-1} = delta x W^T
    Matrix down(batch, layer.in_dim);
    for (int r = 0; r < batch; ++r) {
      const double* drow = delta.data.data() + static_cast<std::size_t>(r) * layer.out_dim;
      double* orow = down.data.data() + static_cast<std::size_t>(r) * layer.in_dim;
      for (int i = 0; i < layer.in_dim; ++i) {
        const double* wrow = layer.weights.data() + static_cast<std::size_t>(i) * layer.out_dim;
        double acc = 0.0;
        for (int j = 0; j < layer.out_dim; ++j) acc += wrow[j] * drow[j];
        orow[i] = acc;
      }
    }

    if (l == 0) {
      *d_input = std::move(down);
      break;
    }

    // through dropout (same mask as forward) and the ReLU derivative
    const DenseLayer& lower = params.layers[l - 1];
    if (lower.activation == Activation::relu) {
      const Matrix& pre = cache.pre_activation[l - 1];
      const auto& mask = cache.drop_mask[l - 1];
      const bool dropped = !mask.empty() && params.dropout_rate > 0.0;
      for (std::size_t i = 0; i < down.data.size(); ++i) {
        if (dropped) down.data[i] = mask[i] ? down.data[i] / keep : 0.0;
        if (pre.data[i] <= 0.0) down.data[i] = 0.0;
      }
    }
    delta = std::move(down);
  }
  return {loss, std::move(grads)};
}

std::pair<double, Gradients> nn_loss_and_grads(const ClassifierParams& params,
                                               const Matrix& features,
                                               const std::vector<int>& labels, Mode mode,
                                               Rng* dropout_rng) {
  ForwardCache cache;
  const Matrix probs = nn_forward(params, features, mode, dropout_rng, &cache);
  return nn_backward_from_cache(params, cache, probs, labels);
}

std::vector<int> argmax_rows(const Matrix& probs) {
  std::vector<int> out(static_cast<std::size_t>(probs.rows));
  for (int r = 0; r < probs.rows; ++r) {
    const auto row = probs.row(r);
    out[static_cast<std::size_t>(r)] =
        static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

double accuracy(const Matrix& probs, const std::vector<int>& labels) {
  if (labels.empty()) return 0.0;
  const std::vector<int> pred = argmax_rows(probs);
  long hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (pred[i] == labels[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

Matrix one_hot(const std::vector<int>& labels, int n_classes) {
  Matrix out(static_cast<int>(labels.size()), n_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= n_classes)
      throw ValidationError("one_hot: label out of range");
    out.at(static_cast<int>(i), labels[i]) = 1.0;
  }
  return out;
}

std::vector<int> one_hot_to_labels(const Matrix& oh) {
  std::vector<int> labels(static_cast<std::size_t>(oh.rows));
  for (int r = 0; r < oh.rows; ++r) {
    int hot = -1;
    for (int c = 0; c < oh.cols; ++c) {
      const double v = oh.at(r, c);
      if (v == 1.0 && hot < 0) {
        hot = c;
      } else if (v != 0.0) {
        throw ValidationError("labels are not one-hot");
      }
    }
    if (hot < 0) throw ValidationError("labels are not one-hot");
    labels[static_cast<std::size_t>(r)] = hot;
  }
  return labels;
}

}  // namespace foram
