#include "vid2ode/adam.hpp"

#include <cmath>

#include "vid2ode/util.hpp"

namespace vid2ode::grad {

Adam::Adam(std::size_t n, AdamConfig cfg)
    : cfg_(cfg),
      m_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n))),
      v_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n))) {
  if (cfg_.lr <= 0) throw Error("Adam: learning rate must be positive");
}

void Adam::step(ParamSet& params, const Eigen::VectorXd& grad) {
  if (grad.size() != m_.size()) throw Error("Adam: gradient size mismatch");
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
  const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
  std::size_t off = 0;
  for (auto& g : params.groups()) {
    if (!g.frozen) {
      const double lr = cfg_.lr * g.lr_mult;
      for (std::size_t i = 0; i < g.size; ++i) {
        Eigen::Index j = static_cast<Eigen::Index>(off + i);
        double gr = grad[j];
        m_[j] = cfg_.beta1 * m_[j] + (1.0 - cfg_.beta1) * gr;
        v_[j] = cfg_.beta2 * v_[j] + (1.0 - cfg_.beta2) * gr * gr;
        double mhat = m_[j] / bc1;
        double vhat = v_[j] / bc2;
        g.data[i] -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
      }
    }
    off += g.size;
  }
}

void Adam::reset() {
  m_.setZero();
  v_.setZero();
  t_ = 0;
}

}  // namespace vid2ode::grad
