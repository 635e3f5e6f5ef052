#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "sango/error.hpp"
#include "sango/learn.hpp"
#include "sango/rng.hpp"
#include "oracles.hpp"

using namespace sango;
using sango::testing::central_differences;
using sango::testing::max_relative_error;
using sango::testing::random_buffer;

TEST(Mlp, ZeroWeightsGiveUniformPolicyAndZeroValue) {
  const PolicyParams p = zero_policy(44, 64);
  const std::vector<double> obs(44, 0.37);
  const PolicyOutput out = policy_forward(p, obs);
  ASSERT_EQ(out.probs.size(), 9u);
  for (double v : out.probs) EXPECT_DOUBLE_EQ(v, 1.0 / 9.0);
  EXPECT_EQ(out.value, 0.0);
}

TEST(Mlp, HandSetForwardPass) {
  // 2 -> 2 -> 1, tanh hidden.
  Mlp net({2, 2, 1});
  auto w0 = net.weights(0);
  w0[0] = 0.5, w0[1] = -0.25, w0[2] = 1.0, w0[3] = 2.0;
  net.bias(0)[0] = 0.1, net.bias(0)[1] = -0.3;
  net.weights(1)[0] = 1.5, net.weights(1)[1] = -0.75;
  net.bias(1)[0] = 0.2;
  const double x0 = 0.4, x1 = -0.6;
  const double h0 = std::tanh(0.5 * x0 - 0.25 * x1 + 0.1);
  const double h1 = std::tanh(1.0 * x0 + 2.0 * x1 - 0.3);
  const double expected = 1.5 * h0 - 0.75 * h1 + 0.2;
  const std::vector<double> in{x0, x1};
  EXPECT_NEAR(net.forward(in)[0], expected, 1e-12);
}

TEST(Mlp, SoftmaxIsADistribution) {
  Rng rng(11);
  for (int trial = 0; trial < 1000; ++trial) {
    const PolicyParams p = random_policy(8, 4, rng.next_u64());
    std::vector<double> obs(8);
    for (double& v : obs) v = rng.uniform(-3.0, 3.0);
    const PolicyOutput out = policy_forward(p, obs);
    double sum = 0.0;
    for (double v : out.probs) {
      EXPECT_GE(v, 0.0);
      sum += v;
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
}

TEST(Mlp, SoftmaxSurvivesExtremeLogits) {
  const std::vector<double> logits{1000.0, -1000.0, 0.0};
  const std::vector<double> p = softmax(logits);
  EXPECT_DOUBLE_EQ(p[0], 1.0);
  EXPECT_TRUE(std::isfinite(p[1]) && std::isfinite(p[2]));
}

TEST(Mlp, ShapeMismatchIsReported) {
  const PolicyParams p = zero_policy(44, 64);
  const std::vector<double> obs(43, 0.0);
  try {
    policy_forward(p, obs);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ShapeMismatch);
  }
}

TEST(Mlp, BackwardMatchesFiniteDifferencesPerNetwork) {
  Rng rng(5);
  Mlp net = Mlp::random({5, 4, 4, 3}, rng, 1.0, 1.0);
  std::vector<double> x(5), upstream(3);
  for (double& v : x) v = rng.uniform(-1, 1);
  for (double& v : upstream) v = rng.normal();
  auto objective = [&] {
    const std::vector<double> y = net.forward(x);
    return std::inner_product(y.begin(), y.end(), upstream.begin(), 0.0);
  };
  Mlp::Trace trace;
  net.forward(x, trace);
  std::vector<double> grad(net.params().size(), 0.0);
  net.backward(trace, upstream, grad);
  std::vector<double> numeric(grad.size());
  const double h = 1e-5;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const double saved = net.params()[i];
    net.params()[i] = saved + h;
    const double up = objective();
    net.params()[i] = saved - h;
    const double down = objective();
    net.params()[i] = saved;
    numeric[i] = (up - down) / (2 * h);
  }
  EXPECT_LT(max_relative_error(grad, numeric), 1e-6);
}

TEST(Ppo, FullLossGradientMatchesFiniteDifferences) {
  Rng rng(2024);
  TrainConfig cfg;
  for (int batch = 0; batch < 20; ++batch) {
    PolicyParams params = random_policy(8, 4, rng.next_u64());
    // Behaviour policy differs so ratios spread over clipped and unclipped regions.
    const PolicyParams behaviour = random_policy(8, 4, rng.next_u64());
    for (double& w : params.actor.params()) w *= 3.0;
    const RolloutBuffer buf = random_buffer(behaviour, 16, rng);
    std::vector<std::size_t> idx(buf.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});

    PolicyGradient grad;
    ppo_loss(params, buf, idx, buf.advantages, cfg, &grad);
    const auto num_actor = central_differences(params, params.actor.params(), buf, idx, cfg, 1e-5);
    const auto num_critic = central_differences(params, params.critic.params(), buf, idx, cfg, 1e-5);
    EXPECT_LT(max_relative_error(grad.actor, num_actor), 1e-4) << "batch " << batch;
    EXPECT_LT(max_relative_error(grad.critic, num_critic), 1e-4) << "batch " << batch;
  }
}
