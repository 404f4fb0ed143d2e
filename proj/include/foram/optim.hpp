#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "foram/common.hpp"

namespace foram {

enum class OptimizerKind { adam, sgd_momentum, rmsprop, adagrad };

OptimizerKind optimizer_from_string(const std::string& name);
std::string optimizer_to_string(OptimizerKind kind);

// Adam moment accumulators plus the shared step counter. The same container
// backs the other optimizers (they use m and/or v as their state).
struct AdamState {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long t = 0;
  std::vector<double> m;
  std::vector<double> v;
};

// One parameter update over a fixed-order list of (parameter, gradient)
// array pairs. State is lazily sized on the first step.
class Optimizer {
 public:
  explicit Optimizer(OptimizerKind kind, double lr);

  void step(std::span<const std::pair<std::span<double>, std::span<const double>>> params);

  OptimizerKind kind() const { return kind_; }
  const AdamState& state() const { return state_; }
  AdamState& state() { return state_; }

 private:
  OptimizerKind kind_;
  AdamState state_;
  double momentum_ = 0.9;   // sgd momentum
  double rho_ = 0.9;        // rmsprop decay
};

// Single-tensor Adam update, exactly the bias-corrected formula.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads);

}  // namespace foram
