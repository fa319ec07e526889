#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "hcpi/core/error.hpp"
#include "hcpi/nn/dense_net.hpp"

namespace hcpi::nn {

struct AdamConfig {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // false gives plain gradient descent: theta <- theta - lr * g
  bool use_moments = true;
};

namespace detail {

template <typename Param, typename Grad, typename Moment>
void adam_update(Param& param, const Grad& grad, Moment& m, Moment& v, const AdamConfig& cfg, std::int64_t step) {
  if (!cfg.use_moments) {
    param -= cfg.learning_rate * grad;
    return;
  }
  m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
  v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  param.array() -= cfg.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg.epsilon);
}

}  // namespace detail

/// Moment accumulators for one DenseNet.
struct OptimizerState {
  AdamConfig config;
  std::int64_t step = 0;
  GradientBuffer first_moment;
  GradientBuffer second_moment;

  OptimizerState() = default;
  OptimizerState(const DenseNet& net, AdamConfig cfg)
      : config(cfg), first_moment(net.zero_gradients()), second_moment(net.zero_gradients()) {}
};

/// One Adam step in place. Rejects non-finite gradients without touching
/// either the network or the optimizer state.
inline void adam_step(DenseNet& net, const GradientBuffer& grads, OptimizerState& opt) {
  require(net.congruent(grads), "adam_step: gradient buffer not congruent with network");
  require(net.congruent(opt.first_moment) && net.congruent(opt.second_moment),
          "adam_step: optimizer state not congruent with network");
  if (!grads.all_finite()) throw NumericalError("adam_step: non-finite gradient entries");
  ++opt.step;
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    detail::adam_update(net.weight(l), grads.weights[l], opt.first_moment.weights[l], opt.second_moment.weights[l],
                        opt.config, opt.step);
    detail::adam_update(net.bias(l), grads.biases[l], opt.first_moment.biases[l], opt.second_moment.biases[l],
                        opt.config, opt.step);
  }
}

/// Adam state for a free parameter vector (the policy log-std).
struct VectorOptimizerState {
  AdamConfig config;
  std::int64_t step = 0;
  Vector first_moment;
  Vector second_moment;

  VectorOptimizerState() = default;
  VectorOptimizerState(Eigen::Index size, AdamConfig cfg)
      : config(cfg), first_moment(Vector::Zero(size)), second_moment(Vector::Zero(size)) {}
};

inline void adam_step(Vector& param, const Vector& grad, VectorOptimizerState& opt) {
  require(param.size() == grad.size() && param.size() == opt.first_moment.size(),
          "adam_step: vector parameter shape mismatch");
  if (!grad.allFinite()) throw NumericalError("adam_step: non-finite gradient entries");
  ++opt.step;
  detail::adam_update(param, grad, opt.first_moment, opt.second_moment, opt.config, opt.step);
}

}  // namespace hcpi::nn
