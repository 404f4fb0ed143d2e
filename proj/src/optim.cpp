#include "foram/optim.hpp"

#include <cmath>

namespace foram {

OptimizerKind optimizer_from_string(const std::string& name) {
  if (name == "adam") return OptimizerKind::adam;
  if (name == "sgd-momentum") return OptimizerKind::sgd_momentum;
  if (name == "rmsprop") return OptimizerKind::rmsprop;
  if (name == "adagrad") return OptimizerKind::adagrad;
  throw ValidationError("unknown optimizer: " + name);
}

std::string optimizer_to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::adam: return "adam";
    case OptimizerKind::sgd_momentum: return "sgd-momentum";
    case OptimizerKind::rmsprop: return "rmsprop";
    case OptimizerKind::adagrad: return "adagrad";
  }
  return "adam";
}

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads) {
  if (params.size() != grads.size()) throw ValidationError("adam_step: shape mismatch");
  if (state.m.size() < params.size()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  state.t += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    params[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
}

Optimizer::Optimizer(OptimizerKind kind, double lr) : kind_(kind) { state_.lr = lr; }

void Optimizer::step(
    std::span<const std::pair<std::span<double>, std::span<const double>>> params) {
  std::size_t total = 0;
  for (const auto& [p, g] : params) {
    if (p.size() != g.size()) throw ValidationError("optimizer: shape mismatch");
    total += p.size();
  }
  if (state_.m.size() != total) {
    state_.m.assign(total, 0.0);
    if (kind_ != OptimizerKind::sgd_momentum) state_.v.assign(total, 0.0);
  }
  state_.t += 1;

  const double lr = state_.lr;
  std::size_t off = 0;
  switch (kind_) {
    case OptimizerKind::adam: {
      const double bc1 = 1.0 - std::pow(state_.beta1, static_cast<double>(state_.t));
      const double bc2 = 1.0 - std::pow(state_.beta2, static_cast<double>(state_.t));
      for (const auto& [p, g] : params) {
        for (std::size_t i = 0; i < p.size(); ++i, ++off) {
          state_.m[off] = state_.beta1 * state_.m[off] + (1.0 - state_.beta1) * g[i];
          state_.v[off] = state_.beta2 * state_.v[off] + (1.0 - state_.beta2) * g[i] * g[i];
          p[i] -= lr * (state_.m[off] / bc1) / (std::sqrt(state_.v[off] / bc2) + state_.epsilon);
        }
      }
      break;
    }
    case OptimizerKind::sgd_momentum:
      for (const auto& [p, g] : params) {
        for (std::size_t i = 0; i < p.size(); ++i, ++off) {
          state_.m[off] = momentum_ * state_.m[off] + g[i];
          p[i] -= lr * state_.m[off];
        }
      }
      break;
    case OptimizerKind::rmsprop:
      for (const auto& [p, g] : params) {
        for (std::size_t i = 0; i < p.size(); ++i, ++off) {
          state_.v[off] = rho_ * state_.v[off] + (1.0 - rho_) * g[i] * g[i];
          p[i] -= lr * g[i] / (std::sqrt(state_.v[off]) + state_.epsilon);
        }
      }
      break;
    case OptimizerKind::adagrad:
      for (const auto& [p, g] : params) {
        for (std::size_t i = 0; i < p.size(); ++i, ++off) {
          state_.v[off] += g[i] * g[i];
          p[i] -= lr * g[i] / (std::sqrt(state_.v[off]) + state_.epsilon);
        }
      }
      break;
  }
}

}  // namespace foram
