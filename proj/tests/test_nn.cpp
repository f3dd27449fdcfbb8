#include "permnet/network.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace permnet;
using permnet::testing::random_matrix;
using permnet::testing::random_vector;

namespace {

// Independent scalar evaluation of g(Wx + b).
std::vector<double> scalar_dense(const std::vector<std::vector<double>>& w,
                                 const std::vector<double>& b, const std::vector<double>& x) {
  std::vector<double> out;
  for (std::size_t i = 0; i < w.size(); ++i) {
    double z = b[i];
    for (std::size_t j = 0; j < x.size(); ++j) z += w[i][j] * x[j];
    out.push_back(std::log(1.0 + std::exp(z)));
  }
  return out;
}

OutputLoss quadratic_loss(Vector target) {
  return {[target](const Vector& y) { return 0.5 * (y - target).squaredNorm(); },
          [target](const Vector& y) { return Vector(y - target); }};
}

}  // namespace

TEST(Softplus, KnownValues) {
  EXPECT_NEAR(softplus(0.0), std::log(2.0), 1e-15);
  EXPECT_NEAR(softplus(40.0), 40.0, 1e-12);
  const double tiny = softplus(-40.0);
  EXPECT_GT(tiny, 0.0);
  EXPECT_LE(tiny, 1e-15);
}

TEST(Softplus, StrictlyPositiveAndFiniteEverywhere) {
  for (double x = -700.0; x <= 700.0; x += 0.37) {
    const double y = softplus(x);
    EXPECT_GT(y, 0.0) << x;
    EXPECT_TRUE(std::isfinite(y)) << x;
  }
  EXPECT_EQ(softplus(1e308), 1e308);
}

TEST(Softplus, BranchIsContinuous) {
  const double below = softplus(std::nextafter(30.0, 0.0));
  const double above = softplus(30.0);
  EXPECT_NEAR(below, above, 1e-13);
  EXPECT_NEAR(softplus_derivative(0.0), 0.5, 1e-15);
}

TEST(DenseForward, IdentityWeights) {
  DenseLayer layer(1, 1, Activation::Softplus);
  layer.weights(0, 0) = 1.0;
  const Vector y = dense_forward(layer, Vector::Zero(1));
  EXPECT_NEAR(y(0), std::log(2.0), 1e-15);
}

TEST(DenseForward, ZeroWeightsGiveActivatedBias) {
  DenseLayer layer(4, 3, Activation::Softplus);
  layer.bias << -1.0, 0.5, 2.0;
  std::mt19937_64 rng(3);
  const Vector y = dense_forward(layer, random_vector(4, rng));
  for (Index i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(y(i), softplus(layer.bias(i)));
}

TEST(DenseForward, MatchesScalarLoop) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    DenseLayer layer(2, 3, Activation::Softplus);
    layer.weights = random_matrix(3, 2, rng, 2.0);
    layer.bias = random_vector(3, rng);
    const Vector x = random_vector(2, rng, 3.0);
    std::vector<std::vector<double>> w(3, std::vector<double>(2));
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 2; ++j) w[i][j] = layer.weights(i, j);
    const auto ref = scalar_dense(w, {layer.bias(0), layer.bias(1), layer.bias(2)},
                                  {x(0), x(1)});
    const Vector y = dense_forward(layer, x);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(y(i), ref[static_cast<std::size_t>(i)], 1e-14);
  }
}

TEST(DenseForward, DimensionMismatchThrows) {
  DenseLayer layer(3, 2, Activation::Softplus);
  EXPECT_THROW(dense_forward(layer, Vector::Zero(2)), DimensionError);
}

TEST(Backprop, ZeroInputGivesZeroFirstLayerWeightGrad) {
  std::mt19937_64 rng(5);
  const Mlp net = Mlp::dense({4, 6, 3}, rng);
  const auto res = backprop(net, Vector::Zero(4), Vector::Ones(3));
  const auto& first = std::get<DenseLayer>(res.grads.layers()[0]);
  EXPECT_EQ(first.weights.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Backprop, LinearLayerBiasGradEqualsUpstream) {
  std::mt19937_64 rng(6);
  const Mlp net = Mlp::dense({3, 2}, rng, Activation::Identity);
  const Vector up = random_vector(2, rng);
  const auto res = backprop(net, random_vector(3, rng), up);
  const auto& g = std::get<DenseLayer>(res.grads.layers()[0]);
  EXPECT_EQ(g.bias, up);
}

TEST(Backprop, UpstreamLengthMismatchThrows) {
  std::mt19937_64 rng(6);
  const Mlp net = Mlp::dense({3, 2}, rng);
  EXPECT_THROW(backprop(net, Vector::Zero(3), Vector::Zero(3)), DimensionError);
}

TEST(Backprop, MatchesFiniteDifferencesRandomNetworks) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> depth(1, 3), width(1, 32);
  double worst = 0.0;
  for (int seed = 0; seed < 100; ++seed) {
    std::vector<Index> widths{width(rng)};
    const int layers = depth(rng);
    for (int l = 0; l < layers; ++l) widths.push_back(width(rng));
    Mlp net = Mlp::dense(widths, rng);
    for (auto span : net.parameter_spans())
      for (auto& v : span) v += 0.1 * std::uniform_real_distribution<double>(-1, 1)(rng);
    const Vector x = random_vector(widths.front(), rng);
    const Vector target = random_vector(widths.back(), rng);
    worst = std::max(worst, finite_diff_check(net, x, quadratic_loss(target)));
  }
  EXPECT_LE(worst, 1e-4);
}

TEST(Backprop, InputGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(77);
  const Mlp net = Mlp::dense({5, 7, 4}, rng);
  Vector x = random_vector(5, rng);
  const Vector up = random_vector(4, rng);
  const auto res = backprop(net, x, up);
  for (Index i = 0; i < 5; ++i) {
    const double h = 1e-6;
    Vector xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    const double cd = (up.dot(net.forward(xp)) - up.dot(net.forward(xm))) / (2 * h);
    EXPECT_LE(relative_error(res.input_grad(i), cd), 1e-6);
  }
}

TEST(FiniteDiffCheck, DetectsCorruptedGradient) {
  std::mt19937_64 rng(8);
  const Mlp net = Mlp::dense({3, 5, 2}, rng);
  const Vector x = random_vector(3, rng);
  const auto loss = quadratic_loss(random_vector(2, rng) + Vector::Constant(2, 3.0));
  EXPECT_LE(finite_diff_check(net, x, loss), 1e-4);
  const double corrupted = finite_diff_check(net, x, loss, 1e-6, [](Mlp& g) {
    std::get<DenseLayer>(g.layers()[0]).weights(0, 0) *= 2.0;
  });
  EXPECT_GT(corrupted, 1e-2);
}

TEST(FiniteDiffCheck, ConstantLossReportsZero) {
  std::mt19937_64 rng(9);
  const Mlp net = Mlp::dense({3, 4, 2}, rng);
  const OutputLoss constant{[](const Vector&) { return 1.5; },
                            [](const Vector& y) { return Vector(Vector::Zero(y.size())); }};
  EXPECT_EQ(finite_diff_check(net, random_vector(3, rng), constant), 0.0);
}

TEST(RelativeError, GuardsZeroOverZero) {
  EXPECT_EQ(relative_error(0.0, 0.0), 0.0);
  EXPECT_NEAR(relative_error(1.0, 1.1), 0.1 / 1.1, 1e-15);
  EXPECT_NEAR(relative_error(1e-10, 0.0), 1e-10 / 1e-8, 1e-15);
}

namespace {

struct ScalarAdam {
  double m = 0, v = 0;
  int t = 0;
  double step(double theta, double g, double lr) {
    ++t;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mhat = m / (1.0 - std::pow(0.9, t));
    const double vhat = v / (1.0 - std::pow(0.999, t));
    return theta - lr * mhat / (std::sqrt(vhat) + 1e-8);
  }
};

}  // namespace

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  std::vector<double> p{1.0, -2.0, 3.0};
  std::vector<double> g(3, 0.0);
  std::vector<std::span<double>> ps{p}, gs{g};
  AdamState st(ps, 0.01);
  adam_step(ps, gs, st, AdamDirection::Descend);
  EXPECT_EQ(p, (std::vector<double>{1.0, -2.0, 3.0}));
  EXPECT_EQ(st.step, 1);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  for (const double grad : {1e-3, 0.5, -7.0}) {
    std::vector<double> p{0.0};
    std::vector<double> g{grad};
    std::vector<std::span<double>> ps{p}, gs{g};
    AdamState st(ps, 0.01);
    adam_step(ps, gs, st, AdamDirection::Descend);
    EXPECT_NEAR(std::abs(p[0]), 0.01, 1e-7);
    EXPECT_LT(p[0] * grad, 0.0);
  }
}

TEST(Adam, ConstantGradientMatchesScalarSimulation) {
  std::vector<double> p{0.3};
  std::vector<double> g{0.7};
  std::vector<std::span<double>> ps{p}, gs{g};
  AdamState st(ps, 0.01);
  ScalarAdam ref;
  double theta = 0.3;
  for (int i = 0; i < 100; ++i) {
    adam_step(ps, gs, st, AdamDirection::Descend);
    theta = ref.step(theta, 0.7, 0.01);
    ASSERT_NEAR(p[0], theta, 1e-15) << "step " << i;
  }
}

TEST(Adam, AscentEqualsDescentOnNegatedGradient) {
  std::mt19937_64 rng(4);
  std::vector<double> a{0.1, 0.2}, b{0.1, 0.2};
  std::vector<std::span<double>> pa{a}, pb{b};
  AdamState sa(pa), sb(pb);
  for (int i = 0; i < 10; ++i) {
    std::vector<double> g{std::normal_distribution<double>()(rng),
                          std::normal_distribution<double>()(rng)};
    std::vector<double> neg{-g[0], -g[1]};
    std::vector<std::span<double>> gs{g}, ns{neg};
    adam_step(pa, gs, sa, AdamDirection::Ascend);
    adam_step(pb, ns, sb, AdamDirection::Descend);
  }
  EXPECT_EQ(a, b);
  EXPECT_EQ(sa.first_moment[0], sb.first_moment[0]);
  EXPECT_EQ(sa.second_moment[0], sb.second_moment[0]);
}

TEST(Adam, ShapeMismatchThrows) {
  std::vector<double> p{1.0, 2.0};
  std::vector<double> g{1.0};
  std::vector<std::span<double>> ps{p}, gs{g};
  AdamState st(ps);
  EXPECT_THROW(adam_step(ps, gs, st, AdamDirection::Descend), DimensionError);
}

TEST(Glorot, BoundsAndZeroBias) {
  std::mt19937_64 rng(10);
  const auto layer = DenseLayer::glorot(30, 20, Activation::Softplus, rng);
  const double limit = std::sqrt(6.0 / 50.0);
  EXPECT_LE(layer.weights.cwiseAbs().maxCoeff(), limit);
  EXPECT_GT(layer.weights.cwiseAbs().maxCoeff(), 0.5 * limit);
  EXPECT_EQ(layer.bias.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Mlp, RejectsIncompatibleLayers) {
  std::vector<Layer> layers{DenseLayer(3, 4, Activation::Softplus),
                            DenseLayer(5, 2, Activation::Softplus)};
  EXPECT_THROW(Mlp{layers}, DimensionError);
}

TEST(ModelContainer, RoundTripIsExact) {
  std::mt19937_64 rng(12);
  std::vector<NamedNetwork> models{
      {"dense", Mlp::dense({4, 5, 3}, rng, Activation::Identity)},
      {"shared", Mlp::equivariant(3, {2, 4, 2}, rng)}};
  for (auto& m : models)
    for (auto span : m.net.parameter_spans())
      for (auto& v : span) v += std::normal_distribution<double>()(rng);
  std::stringstream buf;
  write_models(buf, models);
  const auto back = read_models(buf);
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(back[i].name, models[i].name);
    const auto a = models[i].net.parameter_spans();
    const auto b = back[i].net.parameter_spans();
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t s = 0; s < a.size(); ++s) {
      ASSERT_EQ(a[s].size(), b[s].size());
      for (std::size_t e = 0; e < a[s].size(); ++e) EXPECT_EQ(a[s][e], b[s][e]);
    }
  }
  EXPECT_EQ(std::get<DenseLayer>(back[0].net.layers().back()).activation,
            Activation::Identity);
  EXPECT_EQ(std::get<EquivariantLayer>(back[1].net.layers()[0]).blocks, 3);
}

TEST(ModelContainer, HeaderBytes) {
  std::mt19937_64 rng(1);
  std::stringstream buf;
  write_models(buf, {{"n", Mlp::dense({1, 1}, rng)}});
  const std::string bytes = buf.str();
  ASSERT_GE(bytes.size(), 12u);
  EXPECT_EQ(bytes.substr(0, 4), "PMNT");
  EXPECT_EQ(bytes[4], 1);  // version, little-endian u32
  EXPECT_EQ(bytes[8], 1);  // one network
}

TEST(ModelContainer, RejectsGarbage) {
  std::stringstream bad("NOPE....");
  EXPECT_THROW(read_models(bad), std::runtime_error);
  std::mt19937_64 rng(1);
  std::stringstream buf;
  write_models(buf, {{"n", Mlp::dense({3, 2}, rng)}});
  std::string truncated = buf.str();
  truncated.resize(truncated.size() - 5);
  std::stringstream cut(truncated);
  EXPECT_THROW(read_models(cut), std::runtime_error);
}
