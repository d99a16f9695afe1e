#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "pda/schedules.hpp"
#include "support.hpp"

namespace pda {
namespace {

TEST(LearningRate, EndpointValues) {
  EXPECT_DOUBLE_EQ(lr_schedule(0.0), 0.01);
  EXPECT_NEAR(lr_schedule(1.0), 0.0016565, 1e-6);
  EXPECT_NEAR(lr_schedule(1.0), 0.01 * std::pow(11.0, -0.75), 1e-15);
}

TEST(LearningRate, StrictlyDecreasing) {
  double prev = lr_schedule(0.0);
  for (int i = 1; i <= 100; ++i) {
    const double v = lr_schedule(i / 100.0);
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(LearningRate, CustomConstants) {
  const ScheduleConstants k{0.1, 1.0, 1.0, 10.0};
  EXPECT_DOUBLE_EQ(lr_schedule(1.0, k), 0.05);
}

TEST(Lambda, EndpointValues) {
  EXPECT_EQ(lambda_schedule(0.0), 0.0);
  EXPECT_NEAR(lambda_schedule(1.0), 0.9999092, 1e-7);
  EXPECT_GE(lambda_schedule(1.0), 0.9999);
}

TEST(Lambda, IncreasingWithinUnitInterval) {
  double prev = -1.0;
  for (int i = 0; i <= 100; ++i) {
    const double v = lambda_schedule(i / 100.0);
    EXPECT_GT(v, prev);
    EXPECT_GE(v, 0.0);
    EXPECT_LT(v, 1.0);
    prev = v;
  }
}

TEST(Progress, OutOfRangeThrows) {
  EXPECT_THROW(lr_schedule(-0.1), std::invalid_argument);
  EXPECT_THROW(lambda_schedule(1.5), std::invalid_argument);
  EXPECT_THROW(lr_schedule(NAN), std::invalid_argument);
}

TEST(Rho, EndpointsAndMidpoint) {
  EXPECT_DOUBLE_EQ(rho_schedule(0, 2000, 0.25), 0.25);
  EXPECT_DOUBLE_EQ(rho_schedule(1000, 2000, 0.25), 0.125);
  EXPECT_EQ(rho_schedule(2000, 2000, 0.25), 0.0);
}

TEST(Rho, StaircaseHoldsWithinIntervals) {
  for (std::uint64_t it = 0; it < 2000; ++it) {
    const std::uint64_t k = it / 200;
    EXPECT_DOUBLE_EQ(rho_schedule(it, 2000, 0.25, 200), 0.25 * (1.0 - k / 10.0)) << it;
  }
}

TEST(Rho, AugmentationCountsFallNineToZero) {
  for (std::uint64_t k = 0; k < 10; ++k) {
    const std::size_t expect = (9 * (10 - k)) / 10;
    EXPECT_EQ(augmentation_count(rho_schedule(k * 200, 2000, 0.25, 200), 36), expect) << "interval " << k;
  }
  EXPECT_EQ(augmentation_count(rho_schedule(0, 2000, 0.25, 200), 36), 9u);
  EXPECT_EQ(augmentation_count(rho_schedule(1800, 2000, 0.25, 200), 36), 0u);
  EXPECT_EQ(augmentation_count(0.0, 36), 0u);
}

TEST(Rho, LiteralReading) {
  EXPECT_DOUBLE_EQ(rho_schedule(0, 2000, 0.25, 200, RhoRule::kLiteral), 0.25);
  EXPECT_DOUBLE_EQ(rho_schedule(200, 2000, 0.25, 200, RhoRule::kLiteral), 0.225);
  EXPECT_DOUBLE_EQ(rho_schedule(1800, 2000, 0.25, 200, RhoRule::kLiteral), 0.225);
}

TEST(Rho, Errors) {
  EXPECT_THROW(rho_schedule(0, 0, 0.25), std::invalid_argument);
  EXPECT_THROW(rho_schedule(0, 10, 0.25, 0), std::invalid_argument);
  EXPECT_THROW(rho_schedule(11, 10, 0.25), std::invalid_argument);
  EXPECT_THROW(augmentation_count(-0.1, 36), std::invalid_argument);
}

TEST(ClassWeights, HandExample) {
  const ClassWeights m = estimate_class_weights(Tensor2::from_rows({{0.9, 0.1, 0.0}, {0.7, 0.3, 0.0}}), 7);
  ASSERT_EQ(m.weights.size(), 3u);
  EXPECT_DOUBLE_EQ(m.weights[0], 1.0);
  EXPECT_DOUBLE_EQ(m.weights[1], 0.25);
  EXPECT_EQ(m.weights[2], 0.0);
  EXPECT_EQ(m.updated_at, 7u);
}

TEST(ClassWeights, UniformAndOneHotRows) {
  EXPECT_EQ(estimate_class_weights(Tensor2(5, 4, 0.25)).weights, std::vector<double>(4, 1.0));
  EXPECT_EQ(estimate_class_weights(Tensor2::from_rows({{0, 0, 1, 0}})).weights,
            (std::vector<double>{0, 0, 1, 0}));
  EXPECT_EQ(ClassWeights::uniform(3).weights, std::vector<double>(3, 1.0));
}

TEST(ClassWeights, MaxIsOneAndInvariantToRowOrder) {
  std::mt19937_64 rng(4);
  const Tensor2 p = test::random_simplex(50, 7, rng);
  const ClassWeights m = estimate_class_weights(p);
  double peak = 0.0;
  for (double v : m.weights) {
    EXPECT_GE(v, 0.0);
    peak = std::max(peak, v);
  }
  EXPECT_EQ(peak, 1.0);
  std::vector<std::size_t> order(50);
  for (std::size_t i = 0; i < 50; ++i) order[i] = 49 - i;
  const ClassWeights r = estimate_class_weights(p.gather_rows(order));
  for (std::size_t c = 0; c < 7; ++c) EXPECT_NEAR(r.weights[c], m.weights[c], 1e-14);
}

TEST(ClassWeights, Errors) {
  EXPECT_THROW(estimate_class_weights(Tensor2(0, 3)), std::invalid_argument);
  EXPECT_THROW(estimate_class_weights(Tensor2(2, 3)), std::invalid_argument);
}

TEST(SharedRatio, Values) {
  EXPECT_DOUBLE_EQ(shared_weight_ratio({1.0, 0.8, 0.2, 0.1}, {0, 1}), 0.9 / 0.15);
  EXPECT_TRUE(std::isinf(shared_weight_ratio({1.0, 0.0}, {0})));
  EXPECT_THROW(shared_weight_ratio({1.0, 0.5}, {0, 1}), std::invalid_argument);
  EXPECT_THROW(shared_weight_ratio({1.0, 0.5}, {2}), std::invalid_argument);
}

}  // namespace
}  // namespace pda
