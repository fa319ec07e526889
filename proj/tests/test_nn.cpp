#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <filesystem>
#include <fstream>
#include <vector>

#include <gtest/gtest.h>

#include "hcpi/core/random.hpp"
#include "hcpi/nn/adam.hpp"
#include "hcpi/nn/checkpoint.hpp"
#include "hcpi/nn/dense_net.hpp"

using namespace hcpi;
using nn::DenseNet;
using nn::Matrix;
using nn::Vector;

namespace {

Vector random_vector(Rng& rng, int n) {
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = 2.0 * uniform01(rng) - 1.0;
  return v;
}

DenseNet random_net(std::vector<int> dims, Rng& rng) {
  DenseNet net(dims);
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    for (Eigen::Index i = 0; i < net.weight(l).size(); ++i) net.weight(l).data()[i] = 2.0 * uniform01(rng) - 1.0;
    for (Eigen::Index i = 0; i < net.bias(l).size(); ++i) net.bias(l)(i) = 0.5 * (2.0 * uniform01(rng) - 1.0);
  }
  return net;
}

// Element-by-element dense forward pass written out with plain loops.
std::vector<double> scripted_forward(const DenseNet& net, const std::vector<double>& x) {
  std::vector<double> a = x;
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    const Matrix& w = net.weight(l);
    std::vector<double> z(static_cast<std::size_t>(w.rows()));
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      double s = net.bias(l)(i);
      for (Eigen::Index j = 0; j < w.cols(); ++j) s += w(i, j) * a[static_cast<std::size_t>(j)];
      z[static_cast<std::size_t>(i)] = l + 1 < net.num_layers() ? std::tanh(s) : s;
    }
    a = z;
  }
  return a;
}

double max_rel_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1.0, std::abs(analytic) + std::abs(numeric));
}

}  // namespace

TEST(DenseNetForward, ZeroParametersGiveZeroOutput) {
  DenseNet net({5, 7, 3});
  Vector x = Vector::Constant(5, 3.0);
  EXPECT_TRUE(net.forward(x).isZero(0.0));
}

TEST(DenseNetForward, SingleLinearLayer) {
  DenseNet net({1, 1});
  net.weight(0)(0, 0) = 2.0;
  net.bias(0)(0) = 1.0;
  EXPECT_EQ(net.forward(Vector::Constant(1, 3.0))(0), 7.0);
}

TEST(DenseNetForward, MatchesScriptedOracle) {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    DenseNet net = random_net({3, 4, 2}, rng);
    Vector x = random_vector(rng, 3);
    const auto expected = scripted_forward(net, {x(0), x(1), x(2)});
    const Vector y = net.forward(x);
    for (int i = 0; i < 2; ++i) EXPECT_NEAR(y(i), expected[static_cast<std::size_t>(i)], 1e-12);
  }
}

TEST(DenseNetForward, DimensionMismatchThrows) {
  DenseNet net({3, 4, 2});
  EXPECT_THROW(net.forward(Vector::Zero(4)), ContractViolation);
  EXPECT_THROW(net.forward_batch(Matrix::Zero(2, 5)), ContractViolation);
}

TEST(DenseNetForward, BatchColumnsMatchSingleCalls) {
  Rng rng(3);
  DenseNet net = random_net({4, 6, 6, 2}, rng);
  Matrix x(4, 5);
  for (int c = 0; c < 5; ++c) x.col(c) = random_vector(rng, 4);
  const Matrix out = net.forward_batch(x).activations.back();
  for (int c = 0; c < 5; ++c) EXPECT_TRUE(out.col(c).isApprox(net.forward(x.col(c)), 1e-14));
}

TEST(DenseNetForward, DefaultShapeHasTwoHiddenLayersOf256) {
  const auto dims = nn::default_layer_dims(21, 2);
  EXPECT_EQ(dims, (std::vector<int>{21, 256, 256, 2}));
}

TEST(DenseNetForward, Deterministic) {
  Rng a(5), b(5);
  DenseNet n1 = DenseNet::random({21, 32, 32, 2}, a);
  DenseNet n2 = DenseNet::random({21, 32, 32, 2}, b);
  ASSERT_TRUE(n1 == n2);
  Rng rng(9);
  Vector x = random_vector(rng, 21);
  const Vector y1 = n1.forward(x);
  const Vector y2 = n2.forward(x);
  for (int i = 0; i < 2; ++i) EXPECT_EQ(std::bit_cast<std::uint64_t>(y1(i)), std::bit_cast<std::uint64_t>(y2(i)));
}

TEST(DenseNetBackward, ZeroUpstreamGivesZeroGradient) {
  Rng rng(1);
  DenseNet net = random_net({3, 5, 2}, rng);
  const auto g = net.backward(random_vector(rng, 3), Vector::Zero(2));
  EXPECT_EQ(g.squared_norm(), 0.0);
  EXPECT_TRUE(net.congruent(g));
}

TEST(DenseNetBackward, ScalarLinearNet) {
  DenseNet net({1, 1});
  net.weight(0)(0, 0) = -0.7;
  const auto g = net.backward(Vector::Constant(1, 2.5), Vector::Constant(1, 1.0));
  EXPECT_EQ(g.weights[0](0, 0), 2.5);
  EXPECT_EQ(g.biases[0](0), 1.0);
}

TEST(DenseNetBackward, ShapeMismatchThrows) {
  DenseNet net({3, 4, 2});
  EXPECT_THROW(net.backward(Vector::Zero(3), Vector::Zero(3)), ContractViolation);
}

// Central differences of the scalar u . f(x) against the analytic gradient.
TEST(DenseNetBackward, MatchesFiniteDifferences) {
  Rng rng(2024);
  const std::vector<std::vector<int>> shapes = {{3, 4, 2}, {8, 8, 8, 2}, {5, 3, 1}, {2, 6, 6, 3}};
  const double h = 1e-5;
  for (const auto& dims : shapes) {
    for (int trial = 0; trial < 5; ++trial) {
      DenseNet net = random_net(dims, rng);
      const Vector x = random_vector(rng, dims.front());
      const Vector u = random_vector(rng, dims.back());
      const auto g = net.backward(x, u);
      auto objective = [&](const DenseNet& n) { return u.dot(n.forward(x)); };
      for (std::size_t l = 0; l < net.num_layers(); ++l) {
        for (Eigen::Index i = 0; i < net.weight(l).size(); ++i) {
          DenseNet p = net, m = net;
          p.weight(l).data()[i] += h;
          m.weight(l).data()[i] -= h;
          const double fd = (objective(p) - objective(m)) / (2.0 * h);
          EXPECT_LT(max_rel_error(g.weights[l].data()[i], fd), 1e-6);
        }
        for (Eigen::Index i = 0; i < net.bias(l).size(); ++i) {
          DenseNet p = net, m = net;
          p.bias(l)(i) += h;
          m.bias(l)(i) -= h;
          const double fd = (objective(p) - objective(m)) / (2.0 * h);
          EXPECT_LT(max_rel_error(g.biases[l](i), fd), 1e-6);
        }
      }
    }
  }
}

TEST(DenseNetBackward, BatchGradientIsSumOfSingles) {
  Rng rng(8);
  DenseNet net = random_net({4, 5, 2}, rng);
  Matrix x(4, 3), u(2, 3);
  for (int c = 0; c < 3; ++c) {
    x.col(c) = random_vector(rng, 4);
    u.col(c) = random_vector(rng, 2);
  }
  const auto batch = net.backward(net.forward_batch(x), u);
  auto sum = net.zero_gradients();
  for (int c = 0; c < 3; ++c) sum += net.backward(Vector(x.col(c)), Vector(u.col(c)));
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    EXPECT_TRUE(batch.weights[l].isApprox(sum.weights[l], 1e-12));
    EXPECT_TRUE(batch.biases[l].isApprox(sum.biases[l], 1e-12));
  }
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  Rng rng(4);
  DenseNet net = random_net({3, 4, 2}, rng);
  const DenseNet before = net;
  nn::OptimizerState opt(net, nn::AdamConfig{});
  nn::adam_step(net, net.zero_gradients(), opt);
  EXPECT_TRUE(net == before);
  EXPECT_EQ(opt.step, 1);
}

TEST(Adam, PlainDescentWithMomentsDisabled) {
  Rng rng(6);
  DenseNet net = random_net({3, 4, 2}, rng);
  const DenseNet before = net;
  auto g = net.backward(random_vector(rng, 3), random_vector(rng, 2));
  nn::AdamConfig cfg;
  cfg.learning_rate = 0.0003;
  cfg.use_moments = false;
  nn::OptimizerState opt(net, cfg);
  nn::adam_step(net, g, opt);
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    for (Eigen::Index i = 0; i < net.weight(l).size(); ++i)
      EXPECT_DOUBLE_EQ(net.weight(l).data()[i], before.weight(l).data()[i] - 0.0003 * g.weights[l].data()[i]);
    for (Eigen::Index i = 0; i < net.bias(l).size(); ++i)
      EXPECT_DOUBLE_EQ(net.bias(l)(i), before.bias(l)(i) - 0.0003 * g.biases[l](i));
  }
}

// Scalar Adam written out from the update rule: m, v moments with bias
// correction, three consecutive steps.
TEST(Adam, MatchesScriptedScalarOracle) {
  DenseNet net({1, 1});
  net.weight(0)(0, 0) = 0.5;
  net.bias(0)(0) = -0.25;
  nn::AdamConfig cfg;
  cfg.learning_rate = 0.01;
  nn::OptimizerState opt(net, cfg);
  const double grads_w[] = {0.3, -1.2, 0.05};
  const double grads_b[] = {-2.0, 0.7, 4.0};
  double w = 0.5, b = -0.25, mw = 0, vw = 0, mb = 0, vb = 0;
  for (int t = 1; t <= 3; ++t) {
    auto g = net.zero_gradients();
    g.weights[0](0, 0) = grads_w[t - 1];
    g.biases[0](0) = grads_b[t - 1];
    nn::adam_step(net, g, opt);
    auto step = [&](double& p, double& m, double& v, double gr) {
      m = 0.9 * m + 0.1 * gr;
      v = 0.999 * v + 0.001 * gr * gr;
      const double mh = m / (1.0 - std::pow(0.9, t));
      const double vh = v / (1.0 - std::pow(0.999, t));
      p -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
    };
    step(w, mw, vw, grads_w[t - 1]);
    step(b, mb, vb, grads_b[t - 1]);
    EXPECT_NEAR(net.weight(0)(0, 0), w, 1e-12);
    EXPECT_NEAR(net.bias(0)(0), b, 1e-12);
  }
  EXPECT_EQ(opt.step, 3);
}

TEST(Adam, NonFiniteGradientRejectedWithoutSideEffects) {
  Rng rng(12);
  DenseNet net = random_net({3, 4, 2}, rng);
  const DenseNet before = net;
  nn::OptimizerState opt(net, nn::AdamConfig{});
  auto g = net.zero_gradients();
  g.weights[1](0, 0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(nn::adam_step(net, g, opt), NumericalError);
  EXPECT_TRUE(net == before);
  EXPECT_EQ(opt.step, 0);
}

TEST(Adam, IncongruentGradientThrows) {
  DenseNet net({3, 4, 2});
  DenseNet other({3, 5, 2});
  nn::OptimizerState opt(net, nn::AdamConfig{});
  EXPECT_THROW(nn::adam_step(net, other.zero_gradients(), opt), ContractViolation);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  Rng rng(77);
  DenseNet net = DenseNet::random({21, 16, 16, 2}, rng);
  nn::OptimizerState opt(net, nn::AdamConfig{});
  nn::adam_step(net, net.backward(random_vector(rng, 21), random_vector(rng, 2)), opt);
  Vector log_std = random_vector(rng, 2);

  const auto path = std::filesystem::temp_directory_path() / "hcpi_nn_roundtrip.ckpt";
  {
    nn::TensorArchive ar;
    ar.meta()["note"] = "unit";
    nn::save_net(ar, "actor", net);
    nn::save_optimizer(ar, "opt", opt);
    ar.put("log_std", log_std);
    ar.write(path.string());
  }
  const auto ar = nn::TensorArchive::read(path.string());
  const DenseNet back = nn::load_net(ar, "actor");
  EXPECT_TRUE(back == net);
  nn::OptimizerState opt2(back, nn::AdamConfig{});
  nn::load_optimizer(ar, "opt", opt2);
  EXPECT_EQ(opt2.step, opt.step);
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    EXPECT_EQ(opt2.first_moment.weights[l], opt.first_moment.weights[l]);
    EXPECT_EQ(opt2.second_moment.biases[l], opt.second_moment.biases[l]);
  }
  EXPECT_EQ(ar.get_vector("log_std"), log_std);
  EXPECT_EQ(ar.meta().at("note"), "unit");
  std::filesystem::remove(path);
}

TEST(Checkpoint, VersionMismatchIsRejected) {
  const auto path = std::filesystem::temp_directory_path() / "hcpi_nn_badversion.ckpt";
  std::ofstream(path) << "HCPI-CKPT 999\n{\"meta\":{},\"tensors\":[]}\n";
  EXPECT_THROW(nn::TensorArchive::read(path.string()), ConfigError);
  std::ofstream(path) << "something else\n";
  EXPECT_THROW(nn::TensorArchive::read(path.string()), ConfigError);
  std::filesystem::remove(path);
}
