#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hcpi/core/error.hpp"
#include "hcpi/core/random.hpp"

namespace hcpi::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Per-parameter partial derivatives of a DenseNet, layer for layer.
struct GradientBuffer {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  void set_zero() {
    for (auto& w : weights) w.setZero();
    for (auto& b : biases) b.setZero();
  }

  GradientBuffer& operator+=(const GradientBuffer& other) {
    require(other.weights.size() == weights.size(), "GradientBuffer: layer count mismatch");
    for (std::size_t l = 0; l < weights.size(); ++l) {
      weights[l] += other.weights[l];
      biases[l] += other.biases[l];
    }
    return *this;
  }

  GradientBuffer& operator*=(double s) {
    for (auto& w : weights) w *= s;
    for (auto& b : biases) b *= s;
    return *this;
  }

  bool all_finite() const {
    for (const auto& w : weights)
      if (!w.allFinite()) return false;
    for (const auto& b : biases)
      if (!b.allFinite()) return false;
    return true;
  }

  double squared_norm() const {
    double s = 0.0;
    for (const auto& w : weights) s += w.squaredNorm();
    for (const auto& b : biases) s += b.squaredNorm();
    return s;
  }
};

/// Activations kept from a batched forward pass; consumed by backward().
/// Samples are stored column-wise.
struct ForwardCache {
  std::vector<Matrix> activations;  // activations[0] = input, back() = output
};

/// Fully connected network: tanh on hidden layers, linear output layer.
/// Layer l maps layer_dims[l] -> layer_dims[l+1] as W_l * a + b_l.
class DenseNet {
 public:
  DenseNet() = default;

  /// All-zero network of the given shape.
  explicit DenseNet(std::vector<int> layer_dims) : dims_(std::move(layer_dims)) {
    require(dims_.size() >= 2, "DenseNet: need at least input and output dims");
    for (int d : dims_) require(d > 0, "DenseNet: layer dims must be positive");
    for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
      weights_.push_back(Matrix::Zero(dims_[l + 1], dims_[l]));
      biases_.push_back(Vector::Zero(dims_[l + 1]));
    }
  }

  /// Fan-in scaled uniform weights in [-1/sqrt(fan_in), 1/sqrt(fan_in)],
  /// zero biases. `output_scale` shrinks the final layer, which keeps the
  /// initial policy mean close to zero.
  static DenseNet random(std::vector<int> layer_dims, Rng& rng, double output_scale = 1.0) {
    DenseNet net(std::move(layer_dims));
    for (std::size_t l = 0; l < net.weights_.size(); ++l) {
      auto& w = net.weights_[l];
      double bound = 1.0 / std::sqrt(static_cast<double>(w.cols()));
      if (l + 1 == net.weights_.size()) bound *= output_scale;
      for (Eigen::Index j = 0; j < w.cols(); ++j)
        for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = bound * (2.0 * uniform01(rng) - 1.0);
    }
    return net;
  }

  const std::vector<int>& layer_dims() const { return dims_; }
  std::size_t num_layers() const { return weights_.size(); }
  int input_dim() const { return dims_.front(); }
  int output_dim() const { return dims_.back(); }

  Matrix& weight(std::size_t l) { return weights_[l]; }
  const Matrix& weight(std::size_t l) const { return weights_[l]; }
  Vector& bias(std::size_t l) { return biases_[l]; }
  const Vector& bias(std::size_t l) const { return biases_[l]; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) n += weights_[l].size() + biases_[l].size();
    return n;
  }

  bool all_finite() const {
    for (std::size_t l = 0; l < weights_.size(); ++l)
      if (!weights_[l].allFinite() || !biases_[l].allFinite()) return false;
    return true;
  }

  Vector forward(const Vector& x) const {
    require(x.size() == input_dim(), "DenseNet::forward: input has " + std::to_string(x.size()) +
                                         " entries, expected " + std::to_string(input_dim()));
    Vector a = x;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      Vector z = weights_[l] * a + biases_[l];
      a = (l + 1 < weights_.size()) ? Vector(z.array().tanh()) : z;
    }
    return a;
  }

  /// Forward pass over a batch (one sample per column), retaining the
  /// activations needed by backward().
  ForwardCache forward_batch(const Matrix& x) const {
    require(x.rows() == input_dim(), "DenseNet::forward_batch: input rows " + std::to_string(x.rows()) +
                                         " != input dim " + std::to_string(input_dim()));
    ForwardCache cache;
    cache.activations.reserve(weights_.size() + 1);
    cache.activations.push_back(x);
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      Matrix z = weights_[l] * cache.activations.back();
      z.colwise() += biases_[l];
      if (l + 1 < weights_.size()) z = z.array().tanh().matrix();
      cache.activations.push_back(std::move(z));
    }
    return cache;
  }

  /// Gradient of sum_over_batch(upstream . output) with respect to every
  /// parameter. `upstream` has one column per sample of the cached batch.
  GradientBuffer backward(const ForwardCache& cache, const Matrix& upstream) const {
    require(cache.activations.size() == weights_.size() + 1, "DenseNet::backward: cache does not match network");
    const Matrix& out = cache.activations.back();
    require(upstream.rows() == out.rows() && upstream.cols() == out.cols(),
            "DenseNet::backward: upstream gradient shape mismatch");
    GradientBuffer g;
    g.weights.resize(weights_.size());
    g.biases.resize(weights_.size());
    Matrix delta = upstream;
    for (std::size_t l = weights_.size(); l-- > 0;) {
      const Matrix& a_prev = cache.activations[l];
      g.weights[l].noalias() = delta * a_prev.transpose();
      g.biases[l] = delta.rowwise().sum();
      if (l > 0) {
        Matrix back = weights_[l].transpose() * delta;
        delta = back.array() * (1.0 - a_prev.array().square());
      }
    }
    return g;
  }

  /// Single-sample convenience wrapper around forward_batch/backward.
  GradientBuffer backward(const Vector& x, const Vector& upstream) const {
    return backward(forward_batch(Matrix(x)), Matrix(upstream));
  }

  GradientBuffer zero_gradients() const {
    GradientBuffer g;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      g.weights.push_back(Matrix::Zero(weights_[l].rows(), weights_[l].cols()));
      g.biases.push_back(Vector::Zero(biases_[l].size()));
    }
    return g;
  }

  bool congruent(const GradientBuffer& g) const {
    if (g.weights.size() != weights_.size() || g.biases.size() != biases_.size()) return false;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      if (g.weights[l].rows() != weights_[l].rows() || g.weights[l].cols() != weights_[l].cols()) return false;
      if (g.biases[l].size() != biases_[l].size()) return false;
    }
    return true;
  }

  friend bool operator==(const DenseNet& a, const DenseNet& b) {
    if (a.dims_ != b.dims_) return false;
    for (std::size_t l = 0; l < a.weights_.size(); ++l)
      if (a.weights_[l] != b.weights_[l] || a.biases_[l] != b.biases_[l]) return false;
    return true;
  }

 private:
  std::vector<int> dims_;
  std::vector<Matrix> weights_;
  std::vector<Vector> biases_;
};

/// Default hidden shape: input -> 256 -> 256 -> output.
inline std::vector<int> default_layer_dims(int input, int output, int hidden = 256) {
  return {input, hidden, hidden, output};
}

}  // namespace hcpi::nn
