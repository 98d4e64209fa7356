#include "salgrain/optimizer.hpp"

#include <cmath>

#include "salgrain/error.hpp"

namespace salgrain {

namespace {
double to_single(double v) { return static_cast<double>(static_cast<float>(v)); }
}  // namespace

Optimizer::Optimizer(OptimizerKind kind, double learning_rate, AdamParams adam)
    : kind_(kind), learning_rate_(learning_rate), adam_(adam) {
  set_learning_rate(learning_rate);
}

void Optimizer::set_learning_rate(double rate) {
  if (!(rate > 0.0) || !std::isfinite(rate)) {
    throw Error(ErrorCode::ConfigInvalid, "learning rate must be positive");
  }
  learning_rate_ = rate;
}

void Optimizer::step(std::span<Tensor* const> params, std::span<const Tensor* const> grads) {
  if (params.size() != grads.size()) throw Error(ErrorCode::ShapeMismatch, "parameter/gradient count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) require_same_shape(*params[i], *grads[i], "optimizer step");
  ++steps_;

  if (kind_ == OptimizerKind::SGD) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto p = params[i]->values();
      auto g = grads[i]->values();
      for (std::size_t j = 0; j < p.size(); ++j) p[j] = to_single(p[j] - learning_rate_ * g[j]);
    }
    return;
  }

  if (first_moment_.empty()) {
    for (const Tensor* p : params) {
      first_moment_.emplace_back(p->shape());
      second_moment_.emplace_back(p->shape());
    }
  } else if (first_moment_.size() != params.size()) {
    throw Error(ErrorCode::ShapeMismatch, "Adam state does not match parameter list");
  }

  const double t = static_cast<double>(steps_);
  const double correction1 = 1.0 - std::pow(adam_.beta1, t);
  const double correction2 = 1.0 - std::pow(adam_.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    require_same_shape(*params[i], first_moment_[i], "Adam moments");
    auto p = params[i]->values();
    auto g = grads[i]->values();
    auto m = first_moment_[i].values();
    auto v = second_moment_[i].values();
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = adam_.beta1 * m[j] + (1.0 - adam_.beta1) * g[j];
      v[j] = adam_.beta2 * v[j] + (1.0 - adam_.beta2) * g[j] * g[j];
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      p[j] = to_single(p[j] - learning_rate_ * m_hat / (std::sqrt(v_hat) + adam_.epsilon));
    }
  }
}

double schedule_rate(const LrSchedule& schedule, std::size_t epoch) {
  if (schedule.step_epochs == 0) throw Error(ErrorCode::ConfigInvalid, "step_epochs must be >= 1");
  // Decay applied one drop at a time, like a step scheduler mutating its rate.
  double rate = schedule.initial_rate;
  for (std::size_t drop = 0; drop < epoch / schedule.step_epochs; ++drop) rate *= schedule.decay_factor;
  return rate;
}

}  // namespace salgrain
