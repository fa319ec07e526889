#pragma once

#include <cmath>
#include <numbers>
#include <utility>

#include "hcpi/core/random.hpp"
#include "hcpi/env/observation.hpp"
#include "hcpi/env/vehicle.hpp"
#include "hcpi/nn/dense_net.hpp"

namespace hcpi::rl {

using nn::Matrix;
using nn::Vector;

inline constexpr int kActionDim = 2;
inline constexpr double kLogSqrtTwoPi = 0.91893853320467274178032973640562;  // ln(sqrt(2 pi))

/// Fixed affine observation scaling: z = (obs - offset) * scale.
struct ObservationScaler {
  Vector offset = Vector::Zero(env::kObservationDim);
  Vector scale = Vector::Ones(env::kObservationDim);

  static ObservationScaler highway(const env::RoadConfig& road) {
    ObservationScaler s;
    s.offset(1) = 0.5 * road.width();
    s.offset(2) = road.speed_limit;
    s.scale(0) = 1.0 / 1000.0;
    s.scale(1) = 1.0 / road.lane_width;
    s.scale(2) = 1.0 / 10.0;
    for (int slot = 0; slot < static_cast<int>(env::kSlotCount); ++slot) {
      s.scale(3 + 3 * slot) = 1.0 / env::kSensorRange;
      s.scale(4 + 3 * slot) = 1.0 / road.lane_width;
      s.scale(5 + 3 * slot) = 1.0 / 10.0;
    }
    return s;
  }

  Vector apply(const env::Observation& obs) const {
    Vector z(env::kObservationDim);
    for (int i = 0; i < z.size(); ++i) z(i) = (obs[static_cast<std::size_t>(i)] - offset(i)) * scale(i);
    return z;
  }
};

/// Maps raw (unclamped) Gaussian samples to physical commands:
/// command = offset + scale * raw. The environment clamps afterwards.
struct ActionMapping {
  Vector offset = Vector::Zero(kActionDim);
  Vector scale = (Vector(kActionDim) << 3.5, 0.7).finished();

  env::Action to_physical(const Vector& raw) const {
    return {offset(0) + scale(0) * raw(0), offset(1) + scale(1) * raw(1)};
  }
};

/// Diagonal Gaussian policy with a state-independent log standard deviation.
/// Densities are over raw actions, before any clamping.
class GaussianPolicy {
 public:
  GaussianPolicy() = default;
  GaussianPolicy(nn::DenseNet actor, Vector log_std, ObservationScaler scaler, ActionMapping mapping)
      : actor_(std::move(actor)), log_std_(std::move(log_std)), scaler_(std::move(scaler)), mapping_(std::move(mapping)) {
    require(actor_.output_dim() == log_std_.size(), "GaussianPolicy: log_std size must match actor output");
    require(actor_.input_dim() == static_cast<int>(env::kObservationDim), "GaussianPolicy: actor input must be 21");
  }

  static GaussianPolicy create(Rng& rng, double sigma_init, const env::RoadConfig& road, int hidden = 256) {
    return GaussianPolicy(nn::DenseNet::random(nn::default_layer_dims(env::kObservationDim, kActionDim, hidden), rng, 0.01),
                          Vector::Constant(kActionDim, std::log(sigma_init)), ObservationScaler::highway(road),
                          ActionMapping{});
  }

  nn::DenseNet& actor() { return actor_; }
  const nn::DenseNet& actor() const { return actor_; }
  Vector& log_std() { return log_std_; }
  const Vector& log_std() const { return log_std_; }
  const ObservationScaler& scaler() const { return scaler_; }
  const ActionMapping& mapping() const { return mapping_; }
  void set_mapping(ActionMapping m) { mapping_ = std::move(m); }
  Vector std_dev() const { return log_std_.array().exp(); }

  Vector mean(const env::Observation& obs) const { return actor_.forward(scaler_.apply(obs)); }

  /// Column-per-sample features for a batch of observations.
  template <typename ObsRange>
  Matrix features(const ObsRange& observations) const {
    Matrix x(env::kObservationDim, static_cast<Eigen::Index>(std::size(observations)));
    Eigen::Index c = 0;
    for (const auto& o : observations) x.col(c++) = scaler_.apply(o);
    return x;
  }

  double log_density_given_mean(const Vector& mu, const Vector& raw) const {
    double lp = 0.0;
    for (Eigen::Index d = 0; d < mu.size(); ++d) {
      const double z = (raw(d) - mu(d)) * std::exp(-log_std_(d));
      lp += -0.5 * z * z - log_std_(d) - kLogSqrtTwoPi;
    }
    return lp;
  }

  double log_density(const env::Observation& obs, const Vector& raw) const {
    return log_density_given_mean(mean(obs), raw);
  }

  /// Closed-form entropy of the diagonal Gaussian, sum_d (0.5 ln(2 pi e) + ln sigma_d).
  double entropy() const { return static_cast<double>(log_std_.size()) * (0.5 + kLogSqrtTwoPi) + log_std_.sum(); }

  struct Sample {
    Vector raw;
    double log_density;
  };

  Sample sample(const env::Observation& obs, Rng& rng) const {
    const Vector mu = mean(obs);
    Vector raw(mu.size());
    for (Eigen::Index d = 0; d < mu.size(); ++d) raw(d) = mu(d) + std::exp(log_std_(d)) * standard_normal(rng);
    return {raw, log_density_given_mean(mu, raw)};
  }

 private:
  nn::DenseNet actor_;
  Vector log_std_;
  ObservationScaler scaler_;
  ActionMapping mapping_;
};

/// State-value critic.
class ValueFunction {
 public:
  ValueFunction() = default;
  ValueFunction(nn::DenseNet critic, ObservationScaler scaler) : critic_(std::move(critic)), scaler_(std::move(scaler)) {
    require(critic_.output_dim() == 1, "ValueFunction: critic must have one output");
  }

  static ValueFunction create(Rng& rng, const env::RoadConfig& road, int hidden = 256) {
    return ValueFunction(nn::DenseNet::random(nn::default_layer_dims(env::kObservationDim, 1, hidden), rng),
                         ObservationScaler::highway(road));
  }

  nn::DenseNet& net() { return critic_; }
  const nn::DenseNet& net() const { return critic_; }
  const ObservationScaler& scaler() const { return scaler_; }

  double value(const env::Observation& obs) const { return critic_.forward(scaler_.apply(obs))(0); }

  template <typename ObsRange>
  Vector values(const ObsRange& observations) const {
    Matrix x(env::kObservationDim, static_cast<Eigen::Index>(std::size(observations)));
    Eigen::Index c = 0;
    for (const auto& o : observations) x.col(c++) = scaler_.apply(o);
    return critic_.forward_batch(x).activations.back().row(0).transpose();
  }

 private:
  nn::DenseNet critic_;
  ObservationScaler scaler_;
};

}  // namespace hcpi::rl
