#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "salgrain/tensor.hpp"

namespace salgrain {

enum class OptimizerKind { SGD, Adam };

struct AdamParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Plain SGD (p -= lr * g) or bias-corrected Adam. Updated parameters are
// rounded to single precision so checkpoints reload bit-exactly.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double learning_rate, AdamParams adam = {});

  OptimizerKind kind() const noexcept { return kind_; }
  double learning_rate() const noexcept { return learning_rate_; }
  void set_learning_rate(double rate);
  std::uint64_t steps() const noexcept { return steps_; }

  void step(std::span<Tensor* const> params, std::span<const Tensor* const> grads);

 private:
  OptimizerKind kind_;
  double learning_rate_;
  AdamParams adam_;
  std::uint64_t steps_ = 0;
  std::vector<Tensor> first_moment_;
  std::vector<Tensor> second_moment_;
};

struct LrSchedule {
  double initial_rate = 0.005;
  double decay_factor = 0.1;
  std::size_t step_epochs = 12;
};

// initial_rate * decay_factor ^ floor(epoch / step_epochs)
double schedule_rate(const LrSchedule& schedule, std::size_t epoch);

}  // namespace salgrain
