#include "guardnet/optim.hpp"

#include <cmath>

namespace guardnet {

Adam::Adam(std::vector<ParamGroup> groups, AdamConfig config) : config_(config) {
  for (auto& g : groups) {
    for (auto& p : g.params) {
      slots_.push_back(Slot{p, g.weight_decay, std::vector<double>(p.size(), 0.0),
                            std::vector<double>(p.size(), 0.0)});
    }
  }
}

void Adam::step() {
  for (const auto& s : slots_) {
    if (!s.param.requires_grad() || s.param.grad().size() != s.param.size()) {
      throw StateError("Adam::step: parameter of shape " + shape_string(s.param.shape()) +
                       " has no populated gradient");
    }
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (auto& s : slots_) {
    auto data = s.param.data();
    auto grad = s.param.mutable_grad();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double g = grad[i] + s.weight_decay * data[i];
      s.m[i] = config_.beta1 * s.m[i] + (1.0 - config_.beta1) * g;
      s.v[i] = config_.beta2 * s.v[i] + (1.0 - config_.beta2) * g * g;
      const double m_hat = s.m[i] / bc1;
      const double v_hat = s.v[i] / bc2;
      data[i] -= config_.lr * m_hat / (std::sqrt(v_hat) + config_.eps);
      grad[i] = 0.0;
    }
  }
}

void Adam::zero_grad() {
  for (auto& s : slots_)
    if (s.param.requires_grad()) s.param.zero_grad();
}

}  // namespace guardnet
