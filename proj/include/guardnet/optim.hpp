#pragma once

#include <cstddef>
#include <vector>

#include "guardnet/tensor.hpp"

namespace guardnet {

struct AdamConfig {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct ParamGroup {
  std::vector<Tensor> params;
  double weight_decay = 0.0;  // L2 term added to the gradient
};

/// Adam with bias correction. step() updates in place and zeroes gradients;
/// it refuses to run while any parameter lacks a gradient.
class Adam {
 public:
  Adam(std::vector<ParamGroup> groups, AdamConfig config);

  void step();
  void zero_grad();
  std::size_t steps_taken() const { return t_; }
  const AdamConfig& config() const { return config_; }
  void set_lr(double lr) { config_.lr = lr; }

 private:
  struct Slot {
    Tensor param;
    double weight_decay;
    std::vector<double> m;
    std::vector<double> v;
  };
  std::vector<Slot> slots_;
  AdamConfig config_;
  std::size_t t_ = 0;
};

}  // namespace guardnet
