#include "foram/train.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace foram {

InMemoryFeatureStream::InMemoryFeatureStream(Matrix features, std::vector<int> labels,
                                             int n_variants, int batch_size, bool shuffle,
                                             std::uint64_t seed)
    : features_(std::move(features)),
      labels_(std::move(labels)),
      n_variants_(n_variants),
      batch_size_(batch_size),
      shuffle_(shuffle),
      seed_(seed) {
  if (n_variants_ <= 0) throw ValidationError("feature stream: variants must be positive");
  if (batch_size_ <= 0) throw ValidationError("feature stream: batch size must be positive");
  if (features_.rows % n_variants_ != 0)
    throw ValidationError("feature stream: rows not divisible by variant count");
  n_records_ = features_.rows / n_variants_;
  if (n_records_ == 0) throw ValidationError("feature stream: empty split");
  if (static_cast<std::size_t>(n_records_) != labels_.size())
    throw ValidationError("feature stream: label count mismatch");
}

int InMemoryFeatureStream::steps_per_epoch() const {
  const long samples = static_cast<long>(n_records_) * n_variants_;
  return static_cast<int>((samples + batch_size_ - 1) / batch_size_);
}

FeatureBatch InMemoryFeatureStream::batch(int epoch, int step) const {
  const long samples = static_cast<long>(n_records_) * n_variants_;
  const long begin = static_cast<long>(step) * batch_size_;
  if (begin >= samples) throw ValidationError("feature stream: step out of range");
  const long end = std::min(samples, begin + batch_size_);

  FeatureBatch out;
  out.features = Matrix(static_cast<int>(end - begin), features_.cols);
  out.labels.resize(static_cast<std::size_t>(end - begin));
  for (long pos = begin; pos < end; ++pos) {
    const int pass = static_cast<int>(pos / n_records_);
    const int slot = static_cast<int>(pos % n_records_);
    int record = slot;
    if (shuffle_) {
      // one seeded permutation per (epoch, pass)
      std::vector<std::size_t> perm(static_cast<std::size_t>(n_records_));
      for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
      Rng rng(derive_seed(seed_, "shuffle", static_cast<std::uint64_t>(epoch),
                          static_cast<std::uint64_t>(pass)));
      rng.shuffle(perm);
      record = static_cast<int>(perm[static_cast<std::size_t>(slot)]);
    }
    const int row = record * n_variants_ + pass % n_variants_;
    const auto src = features_.row(row);
    std::copy(src.begin(), src.end(),
              out.features.data.begin() +
                  static_cast<std::size_t>(pos - begin) * features_.cols);
    out.labels[static_cast<std::size_t>(pos - begin)] = labels_[static_cast<std::size_t>(record)];
  }
  return out;
}

double evaluate_accuracy(const ClassifierParams& params, const EvalSet& set) {
  const Matrix probs = nn_forward(params, set.features, Mode::eval);
  return accuracy(probs, set.labels);
}

TrainReport train_classifier(ClassifierParams& params, const FeatureStream& train,
                             const EvalSet& val, const EvalSet* test, const TrainConfig& cfg) {
  if (cfg.max_epochs < 0) throw ValidationError("train: max_epochs must be >= 0");
  if (cfg.patience < 0) throw ValidationError("train: patience must be >= 0");

  Optimizer optimizer(cfg.optimizer, cfg.lr);

  TrainReport report;
  report.initial_val_accuracy = evaluate_accuracy(params, val);
  report.best_val_accuracy = report.initial_val_accuracy;
  report.best_epoch = 0;

  std::vector<DenseLayer> best_layers = params.layers;
  int bad_epochs = 0;

  const int steps = train.steps_per_epoch();
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    double loss_sum = 0.0;
    for (int step = 0; step < steps; ++step) {
      const FeatureBatch batch = train.batch(epoch, step);
      Rng dropout_rng(derive_seed(cfg.seed, "dropout", static_cast<std::uint64_t>(epoch),
                                  static_cast<std::uint64_t>(step)));
      auto [loss, grads] =
          nn_loss_and_grads(params, batch.features, batch.labels, Mode::train, &dropout_rng);
      if (!std::isfinite(loss))
        throw RuntimeFailure("training diverged: non-finite loss at epoch " +
                             std::to_string(epoch) + " step " + std::to_string(step));
      loss_sum += loss;

      std::vector<std::pair<std::span<double>, std::span<const double>>> views;
      for (std::size_t l = 0; l < params.layers.size(); ++l) {
        views.emplace_back(std::span<double>(params.layers[l].weights),
                           std::span<const double>(grads.weights[l]));
        views.emplace_back(std::span<double>(params.layers[l].bias),
                           std::span<const double>(grads.bias[l]));
      }
      optimizer.step(views);
    }
    report.train_loss.push_back(loss_sum / steps);

    const double val_acc = evaluate_accuracy(params, val);
    report.val_accuracy.push_back(val_acc);
    report.stopped_epoch = epoch;

    if (val_acc > report.best_val_accuracy) {
      report.best_val_accuracy = val_acc;
      report.best_epoch = epoch;
      best_layers = params.layers;
      bad_epochs = 0;
    } else {
      ++bad_epochs;
      if (bad_epochs > cfg.patience) break;
    }
  }

  params.layers = std::move(best_layers);
  if (test) report.test_accuracy = evaluate_accuracy(params, *test);
  return report;
}

std::vector<GridEntry> default_search_grid() {
  static const std::vector<std::vector<int>> widths{
      {256, 32}, {512, 64}, {1024, 128}, {32, 256}, {64, 512}, {128, 1024}};
  static const std::vector<double> dropouts{0.3, 0.4, 0.5};
  static const std::vector<OptimizerKind> optimizers{
      OptimizerKind::adam, OptimizerKind::sgd_momentum, OptimizerKind::rmsprop,
      OptimizerKind::adagrad};

  std::vector<GridEntry> grid;
  for (const auto& w : widths)
    for (double d : dropouts)
      for (OptimizerKind opt : optimizers) grid.push_back(GridEntry{w, d, opt});
  return grid;
}

std::vector<GridResult> grid_search(const std::vector<GridEntry>& grid,
                                    const Matrix& train_features,
                                    const std::vector<int>& train_labels, const EvalSet& val,
                                    int n_classes, const TrainConfig& base, int workers) {
  if (grid.empty()) throw ValidationError("grid_search: empty grid");

  std::vector<GridResult> results(grid.size());
#ifdef _OPENMP
  if (workers <= 0) workers = omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(workers)
#endif
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const GridEntry& entry = grid[i];
    const std::uint64_t seed = derive_seed(base.seed, "grid", i);
    ClassifierParams params = ClassifierParams::make(train_features.cols, entry.hidden,
                                                     n_classes, entry.dropout, seed);
    TrainConfig cfg = base;
    cfg.seed = seed;
    cfg.optimizer = entry.optimizer;
    InMemoryFeatureStream stream(train_features, train_labels, 1, cfg.batch_size, true, seed);
    const TrainReport report = train_classifier(params, stream, val, nullptr, cfg);
    results[i] = GridResult{entry, static_cast<int>(i), report.best_val_accuracy,
                            params.param_count()};
  }

  std::sort(results.begin(), results.end(), [](const GridResult& a, const GridResult& b) {
    if (a.best_val_accuracy != b.best_val_accuracy)
      return a.best_val_accuracy > b.best_val_accuracy;
    if (a.param_count != b.param_count) return a.param_count < b.param_count;
    return a.config_index < b.config_index;
  });
  return results;
}

}  // namespace foram
