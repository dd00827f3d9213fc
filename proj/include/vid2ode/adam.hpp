#pragma once

#include "vid2ode/param_set.hpp"

namespace vid2ode::grad {

// Standard bias-corrected Adam. Frozen groups receive no update regardless
// of their gradient; per-group learning-rate multipliers scale the base rate.
struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam(std::size_t n, AdamConfig cfg = {});

  void step(ParamSet& params, const Eigen::VectorXd& grad);
  void reset();
  int step_count() const { return t_; }
  const AdamConfig& config() const { return cfg_; }
  void set_lr(double lr) { cfg_.lr = lr; }

 private:
  AdamConfig cfg_;
  Eigen::VectorXd m_, v_;
  int t_ = 0;
};

}  // namespace vid2ode::grad
