#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "foram/nn.hpp"

namespace foram {

// Stacked stochastic predictions: n_passes x batch x classes.
struct McRun {
  int n_passes = 0;
  int batch = 0;
  int classes = 0;
  std::uint64_t seed = 0;
  std::vector<double> predictions;

  double& at(int pass, int item, int cls) {
    return predictions[(static_cast<std::size_t>(pass) * batch + item) * classes + cls];
  }
  double at(int pass, int item, int cls) const {
    return predictions[(static_cast<std::size_t>(pass) * batch + item) * classes + cls];
  }
};

enum class DifficultyFlag { ok, uncertain, confident_wrong };

std::string flag_to_string(DifficultyFlag flag);

struct McSummary {
  int batch = 0;
  int classes = 0;
  int n_passes = 0;
  std::vector<double> mean;      // batch x classes
  std::vector<double> variance;  // batch x classes, divisor N
  std::vector<int> votes;        // batch x classes, per-pass argmax tallies
  std::vector<int> predicted_class;
  std::vector<DifficultyFlag> flags;  // filled by flag_difficult

  double mean_at(int item, int cls) const {
    return mean[static_cast<std::size_t>(item) * classes + cls];
  }
  double variance_at(int item, int cls) const {
    return variance[static_cast<std::size_t>(item) * classes + cls];
  }
  int votes_at(int item, int cls) const {
    return votes[static_cast<std::size_t>(item) * classes + cls];
  }
};

// Runs n_passes train-mode forward passes with dropout active; the mask for
// pass i is derived from (seed, i), so any pass is reproducible in isolation.
// Warns on dropout_rate 0 (all passes identical) without failing.
McRun mc_predict(const ClassifierParams& params, const Matrix& features, int n_passes,
                 std::uint64_t seed);

// Predictive mean and population variance over the passes plus vote tallies.
McSummary summarize(const McRun& run);

// Most-voted class; ties broken by higher predictive mean, then lower index.
std::vector<int> majority_vote(const McSummary& summary);

struct FlagThresholds {
  double confidence = 0.7;  // tau_c
  double margin = 0.2;      // tau_m
};

// uncertain: max mean below tau_c or top-two margin below tau_m;
// confident_wrong: confident but mispredicted; ok otherwise.
std::vector<DifficultyFlag> flag_difficult(const McSummary& summary,
                                           const std::vector<int>& labels,
                                           const FlagThresholds& thresholds);

// Ranking scalar for reports: the largest per-class variance of a specimen.
double uncertainty_score(const McSummary& summary, int item);

// Fig.-5-style histogram: per specimen and class, 20 uniform bins over [0, 1]
// counting the per-pass softmax outputs.
std::vector<int> prediction_histogram(const McRun& run, int item, int cls, int bins = 20);

}  // namespace foram
