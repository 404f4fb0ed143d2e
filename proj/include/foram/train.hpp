#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "foram/nn.hpp"
#include "foram/optim.hpp"

namespace foram {

struct FeatureBatch {
  Matrix features;
  std::vector<int> labels;
};

// Deterministic batch access over feature vectors: content depends only on
// (seed, epoch, step).
class FeatureStream {
 public:
  virtual ~FeatureStream() = default;
  virtual int steps_per_epoch() const = 0;
  virtual FeatureBatch batch(int epoch, int step) const = 0;
};

// Rows laid out as record-major variant blocks (row = record * variants + v).
// A shuffling stream iterates one variant pass per epoch per variant, each
// pass in its own seeded order, so every record is seen exactly `variants`
// times per epoch.
class InMemoryFeatureStream : public FeatureStream {
 public:
  InMemoryFeatureStream(Matrix features, std::vector<int> labels, int n_variants,
                        int batch_size, bool shuffle, std::uint64_t seed);

  int steps_per_epoch() const override;
  FeatureBatch batch(int epoch, int step) const override;

  int record_count() const { return n_records_; }

 private:
  Matrix features_;
  std::vector<int> labels_;  // per record
  int n_records_;
  int n_variants_;
  int batch_size_;
  bool shuffle_;
  std::uint64_t seed_;
};

struct EvalSet {
  Matrix features;
  std::vector<int> labels;
};

struct TrainConfig {
  int batch_size = 32;
  double lr = 1e-4;
  int max_epochs = 50;
  int patience = 3;  // consecutive non-improving epochs tolerated before stopping
  OptimizerKind optimizer = OptimizerKind::adam;
  std::uint64_t seed = 0;
};

struct TrainReport {
  std::vector<double> train_loss;    // per epoch
  std::vector<double> val_accuracy;  // per epoch
  double initial_val_accuracy = 0.0;
  int stopped_epoch = 0;
  int best_epoch = 0;  // 0 = the initial parameters
  double best_val_accuracy = 0.0;
  double test_accuracy = -1.0;  // -1 when no test set was given
};

// Trains in place: iterates the stream with train-mode forward/backward and
// the configured optimizer, evaluates validation accuracy at the end of each
// epoch, stops early, and restores the parameters with the best validation
// accuracy. The initial parameters count as the epoch-0 candidate.
TrainReport train_classifier(ClassifierParams& params, const FeatureStream& train,
                             const EvalSet& val, const EvalSet* test, const TrainConfig& cfg);

double evaluate_accuracy(const ClassifierParams& params, const EvalSet& set);

struct GridEntry {
  std::vector<int> hidden;
  double dropout = 0.5;
  OptimizerKind optimizer = OptimizerKind::adam;
};

struct GridResult {
  GridEntry entry;
  int config_index = 0;
  double best_val_accuracy = 0.0;
  std::size_t param_count = 0;
};

// 6 hidden-width pairs x 3 dropout rates x 4 optimizers = 72 configurations.
std::vector<GridEntry> default_search_grid();

// Trains every configuration under a reduced budget and ranks by validation
// accuracy, ties broken by fewer parameters then configuration order.
std::vector<GridResult> grid_search(const std::vector<GridEntry>& grid,
                                    const Matrix& train_features,
                                    const std::vector<int>& train_labels,
                                    const EvalSet& val, int n_classes,
                                    const TrainConfig& base, int workers = 0);

}  // namespace foram
