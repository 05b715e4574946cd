#include <cmath>
#include <cstdint>
#include <vector>

#include <gtest/gtest.h>

#include "greedypixel/attack.hpp"
#include "greedypixel/image.hpp"
#include "greedypixel/nets.hpp"
#include "greedypixel/oracle.hpp"
#include "greedypixel/rng.hpp"

namespace gp = greedypixel;

namespace {

gp::Image random_interior_image(gp::Shape s, std::uint64_t seed) {
  gp::SplitMix64 g(seed);
  std::vector<double> data(s.volume());
  for (double& v : data) v = g.next_in(0.2, 0.8);
  return gp::Image(s, std::move(data));
}

}  // namespace

TEST(CountSpace, ClosedForms) {
  EXPECT_EQ(gp::count_space(gp::SpaceKind::Binary, {3, 2, 2}), gp::BigInt(4096));
  EXPECT_EQ(gp::count_space(gp::SpaceKind::Discrete, {1, 1, 1}, 4.0 / 255.0), gp::BigInt(9));
  EXPECT_EQ(gp::count_space(gp::SpaceKind::PerPixel, {3, 9, 9}), gp::BigInt(8));
  EXPECT_EQ(gp::count_space(gp::SpaceKind::OnePass, {3, 32, 32}), gp::BigInt(8192));
}

TEST(CountSpace, EpsilonTimes255TruncatesRobustly) {
  // 8/255 scaled back up must give 8 steps, not 7
  EXPECT_EQ(gp::count_space(gp::SpaceKind::Discrete, {1, 1, 1}, 8.0 / 255.0), gp::BigInt(17));
  EXPECT_EQ(gp::count_space(gp::SpaceKind::Discrete, {1, 1, 2}, 1.0 / 255.0), gp::BigInt(9));
}

TEST(CountSpace, BinaryEqualsPerPixelPowerPixels) {
  for (const gp::Shape s : {gp::Shape{3, 2, 2}, gp::Shape{1, 4, 3}, gp::Shape{4, 5, 5}}) {
    const gp::BigInt binary = gp::count_space(gp::SpaceKind::Binary, s);
    const gp::BigInt per_pixel = gp::count_space(gp::SpaceKind::PerPixel, s);
    EXPECT_EQ(binary, boost::multiprecision::pow(
                          per_pixel, static_cast<unsigned>(s.h) * s.w));
  }
}

TEST(CountSpace, ArbitraryPrecisionBeyondUint64) {
  // full CIFAR-sized discrete space: 17^3072, thousands of digits
  const gp::BigInt v = gp::count_space(gp::SpaceKind::Discrete, {3, 32, 32}, 8.0 / 255.0);
  EXPECT_EQ(v.str().size(), 3780u);
  const gp::BigInt b = gp::count_space(gp::SpaceKind::Binary, {3, 32, 32});
  EXPECT_EQ(b, boost::multiprecision::pow(gp::BigInt(2), 3072));
}

TEST(CountSpace, Validation) {
  EXPECT_THROW(gp::count_space(gp::SpaceKind::Binary, {0, 2, 2}), gp::DimensionError);
  EXPECT_THROW(gp::count_space(gp::SpaceKind::Discrete, {1, 1, 1}, 0.0), gp::DomainError);
}

TEST(BruteForce, SinglePixelMatchesGreedyCandidateSet) {
  const gp::Shape s{1, 1, 1};
  const gp::LinearNet net = gp::LinearNet::random(2, s, 6);
  const gp::Image x(s, 0.4);
  const double eps = 0.1;
  const gp::BruteForceResult r = gp::brute_force_global(net, x, 0, eps);
  EXPECT_EQ(r.states_visited, 2u);
  const double minus = net.loss(gp::Image(s, {0.4 - eps}), 0);
  const double plus = net.loss(gp::Image(s, {0.4 + eps}), 0);
  EXPECT_DOUBLE_EQ(r.loss, std::min(minus, plus));
  EXPECT_DOUBLE_EQ(r.delta.data[0], minus <= plus ? -eps : eps);
}

TEST(BruteForce, ZeroWeightsReturnLexicographicallyFirstState) {
  const gp::Shape s{1, 2, 2};
  gp::LinearNet net(2, s, 0, std::vector<double>(8, 0.0), {0.0, 0.0});
  const gp::Image x(s, 0.5);
  const gp::BruteForceResult r = gp::brute_force_global(net, x, 0, 0.1);
  EXPECT_EQ(r.states_visited, 16u);
  for (double d : r.delta.data) EXPECT_DOUBLE_EQ(d, -0.1);  // all-minus is state 0
}

TEST(BruteForce, LinearOptimumIsNegativeGradientSignPattern) {
  const gp::Shape s{3, 2, 2};
  const double eps = 8.0 / 255.0;
  for (std::uint64_t seed : {21ull, 22ull, 23ull, 24ull}) {
    const gp::LinearNet net = gp::LinearNet::random(2, s, seed);
    const gp::Image x = random_interior_image(s, seed + 200);
    const int y = gp::argmax(net.logits(x));
    const gp::BruteForceResult r = gp::brute_force_global(net, x, y, eps);
    EXPECT_EQ(r.states_visited, 4096u);
    const gp::Tensor g = net.cw_loss_gradient(x, y);
    for (std::size_t i = 0; i < g.data.size(); ++i) {
      if (g.data[i] == 0.0) continue;
      EXPECT_DOUBLE_EQ(r.delta.data[i], g.data[i] > 0.0 ? -eps : eps) << "seed " << seed;
    }
  }
}

TEST(BruteForce, RespectsSizeCap) {
  const gp::Shape s{3, 3, 2};  // 18 coordinates
  const gp::LinearNet net = gp::LinearNet::random(2, s, 1);
  EXPECT_THROW(gp::brute_force_global(net, gp::Image(s, 0.5), 0, 0.05), gp::SizeError);
  // raising the cap admits the instance
  EXPECT_NO_THROW(gp::brute_force_global(net, gp::Image(s, 0.5), 0, 0.05, 18));
}

TEST(BruteForce, ClampingMatchesEngineSemantics) {
  // at the box boundary the effective deltas shrink identically to the engine
  const gp::Shape s{1, 1, 2};
  const gp::LinearNet net = gp::LinearNet::random(2, s, 9);
  const gp::Image x(s, {0.0, 1.0});
  const double eps = 0.1;
  const gp::BruteForceResult r = gp::brute_force_global(net, x, 0, eps);
  for (std::size_t i = 0; i < r.delta.data.size(); ++i) {
    const double v = x.data()[i] + r.delta.data[i];
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    EXPECT_LE(std::abs(r.delta.data[i]), eps);
  }
}

TEST(CoordinateCheck, ZeroDeltaWithNonzeroGradientFails) {
  const gp::Shape s{3, 2, 2};
  const gp::LinearNet net = gp::LinearNet::random(2, s, 14);
  const gp::Image x = random_interior_image(s, 140);
  const int y = gp::argmax(net.logits(x));
  const gp::CoordinateCheck c =
      gp::verify_coordinate_minimum(net, x, gp::Tensor(s), y, 8.0 / 255.0);
  EXPECT_FALSE(c.is_minimum);
  EXPECT_GE(c.improving_pixel.h, 0);
}

TEST(CoordinateCheck, BruteForceOutputIsCoordinateMinimum) {
  const gp::Shape s{3, 2, 2};
  for (std::uint64_t seed : {31ull, 32ull, 33ull}) {
    const gp::TinyConvNet net = gp::TinyConvNet::random(2, s, 2, seed);
    const gp::Image x = random_interior_image(s, seed + 300);
    const int y = gp::argmax(net.logits(x));
    const double eps = 8.0 / 255.0;
    const gp::BruteForceResult r = gp::brute_force_global(net, x, y, eps);
    EXPECT_TRUE(gp::verify_coordinate_minimum(net, x, r.delta, y, eps).is_minimum)
        << "seed " << seed;
  }
}

TEST(CoordinateCheck, ConvergedGreedyRunIsCoordinateMinimum) {
  const gp::Shape s{3, 2, 2};
  const double eps = 8.0 / 255.0;
  for (std::uint64_t seed : {41ull, 42ull, 43ull, 44ull}) {
    const gp::LinearNet net = gp::LinearNet::random(2, s, seed);
    const gp::Image x = random_interior_image(s, seed + 400);
    const int y = gp::argmax(net.logits(x));
    gp::AttackConfig cfg;
    cfg.epsilon = eps;
    cfg.threat = gp::ThreatModel::WhiteBoxLimited;
    cfg.early_stop = false;
    cfg.max_queries = gp::one_pass_cost(s.c, s.h, s.w) * 64;
    const gp::AttackResult r = gp::run_attack(net, nullptr, x, y, cfg);
    ASSERT_TRUE(r.converged) << "seed " << seed;
    EXPECT_TRUE(gp::verify_coordinate_minimum(net, x, r.delta, y, eps).is_minimum)
        << "seed " << seed;
  }
}

TEST(CoordinateCheck, GreedyMatchesGlobalOptimumForTwoClassLinear) {
  const gp::Shape s{3, 2, 2};
  const double eps = 8.0 / 255.0;
  for (std::uint64_t seed : {51ull, 52ull, 53ull, 54ull, 55ull}) {
    const gp::LinearNet net = gp::LinearNet::random(2, s, seed);
    const gp::Image x = random_interior_image(s, seed + 500);
    const int y = gp::argmax(net.logits(x));
    gp::AttackConfig cfg;
    cfg.epsilon = eps;
    cfg.threat = gp::ThreatModel::WhiteBoxLimited;
    cfg.early_stop = false;
    cfg.max_queries = gp::one_pass_cost(s.c, s.h, s.w) * 64;
    const gp::AttackResult greedy = gp::run_attack(net, nullptr, x, y, cfg);
    const gp::BruteForceResult brute = gp::brute_force_global(net, x, y, eps);
    EXPECT_EQ(brute.loss, greedy.final_loss) << "seed " << seed;  // gap exactly zero
  }
}
