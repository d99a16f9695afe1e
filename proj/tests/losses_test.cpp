#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "pda/losses.hpp"
#include "support.hpp"

namespace pda {
namespace {

const double kLn2 = std::log(2.0);

// ---- independent oracles --------------------------------------------------------

double oracle_entropy(std::span<const double> h) {
  double s = 0.0;
  for (double v : h) {
    if (v > 0.0) s -= v * std::log(v);
  }
  return s;
}

/// Normalized complement-entropy contribution of one sample with m = 1.
double oracle_complement(std::span<const double> p, std::size_t a, double xi) {
  const double rest = 1.0 - p[a];
  if (rest <= 1e-12) return 0.0;
  double s = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (j == a || p[j] <= 0.0) continue;
    const double q = p[j] / rest;
    s += q * std::log(q);
  }
  return std::pow(rest, xi) * s / std::log(static_cast<double>(p.size() - 1));
}

double one_sample_wce(const std::vector<double>& p, std::size_t a, double xi) {
  const Tensor2 preds(1, p.size(), p);
  const std::vector<std::size_t> y{a};
  const std::vector<double> m(p.size(), 1.0);
  return complement_entropy_loss(preds, y, m, xi);
}

Tensor2 column(std::initializer_list<double> v) { return Tensor2(v.size(), 1, std::vector<double>(v)); }

// ---- entropy and sample weights ---------------------------------------------------

TEST(Entropy, HandValues) {
  EXPECT_EQ(entropy(std::vector<double>{0.0, 1.0, 0.0}), 0.0);
  EXPECT_NEAR(entropy(std::vector<double>(7, 1.0 / 7.0)), std::log(7.0), 1e-12);
  EXPECT_NEAR(entropy(std::vector<double>{0.5, 0.5, 0.0}), 0.693147, 1e-6);
  EXPECT_NEAR(entropy(std::vector<double>{0.5, 0.5, 0.0}), kLn2, 1e-15);
}

TEST(Entropy, MatchesOracleOnRandomPoints) {
  std::mt19937_64 rng(1);
  const Tensor2 pts = test::random_simplex(200, 6, rng);
  for (std::size_t r = 0; r < pts.rows(); ++r) EXPECT_NEAR(entropy(pts.row(r)), oracle_entropy(pts.row(r)), 1e-12);
}

TEST(SampleWeight, HandValues) {
  EXPECT_DOUBLE_EQ(sample_weight(std::vector<double>{1.0, 0.0, 0.0}), 2.0);
  EXPECT_NEAR(sample_weight(std::vector<double>(10, 0.1)), 1.1, 1e-12);
  EXPECT_NEAR(sample_weight(std::vector<double>{0.5, 0.5}), 1.5, 1e-12);
}

TEST(SampleWeight, RangeAndMonotoneInConfidence) {
  std::mt19937_64 rng(2);
  const Tensor2 pts = test::random_simplex(500, 5, rng);
  for (std::size_t r = 0; r < pts.rows(); ++r) {
    const double w = sample_weight(pts.row(r));
    EXPECT_GT(w, 1.0);
    EXPECT_LE(w, 2.0);
    EXPECT_NEAR(w, 1.0 + std::exp(-oracle_entropy(pts.row(r))), 1e-12);
  }
  double prev = 0.0;
  for (double c = 0.2; c < 1.0; c += 0.1) {
    const double w = sample_weight(std::vector<double>{c, (1.0 - c) / 4.0, (1.0 - c) / 4.0, (1.0 - c) / 4.0, (1.0 - c) / 4.0});
    EXPECT_GT(w, prev);
    prev = w;
  }
}

TEST(SampleWeight, CarriesNoGradient) {
  Graph g;
  const NodeId logits = g.parameter("z", Tensor2::from_rows({{0.3, -1.0, 2.0}, {0.0, 0.5, 0.1}}));
  g.mean(graph_loss::sample_weight(g, g.softmax_rows(logits)));
  g.forward();
  EXPECT_EQ(g.backward().at("z"), Tensor2(2, 3));
}

TEST(Distribution, Errors) {
  EXPECT_THROW(entropy(std::vector<double>{}), std::invalid_argument);
  EXPECT_THROW(entropy(std::vector<double>{0.5, 0.6}), std::invalid_argument);
  EXPECT_THROW(sample_weight(std::vector<double>{1.5, -0.5}), std::invalid_argument);
  EXPECT_THROW(entropy(std::vector<double>{NAN, 1.0}), std::invalid_argument);
}

// ---- classification and conditional entropy ----------------------------------------

TEST(WeightedCls, HandValues) {
  const std::vector<std::size_t> y0{0};
  EXPECT_NEAR(weighted_cls_loss(Tensor2::from_rows({{0.5, 0.25, 0.25}}), y0, std::vector<double>{1, 1, 1}),
              0.693147, 1e-6);
  EXPECT_EQ(weighted_cls_loss(Tensor2::from_rows({{1.0, 0.0, 0.0}}), y0, std::vector<double>{1, 1, 1}), 0.0);
  EXPECT_EQ(weighted_cls_loss(Tensor2::from_rows({{0.1, 0.8, 0.1}}), y0, std::vector<double>{0, 1, 1}), 0.0);
}

TEST(WeightedCls, LinearInClassWeights) {
  std::mt19937_64 rng(3);
  const Tensor2 p = test::random_simplex(12, 4, rng);
  std::vector<std::size_t> y;
  for (std::size_t i = 0; i < 12; ++i) y.push_back(i % 4);
  const std::vector<double> m1{1.0, 0.2, 0.5, 0.0}, m2{0.3, 1.0, 0.1, 0.7};
  std::vector<double> mix(4);
  for (std::size_t c = 0; c < 4; ++c) mix[c] = 2.0 * m1[c] + 0.5 * m2[c];
  EXPECT_NEAR(weighted_cls_loss(p, y, mix), 2.0 * weighted_cls_loss(p, y, m1) + 0.5 * weighted_cls_loss(p, y, m2),
              1e-12);
}

TEST(WeightedCls, MatchesOracle) {
  std::mt19937_64 rng(4);
  const Tensor2 p = test::random_simplex(9, 5, rng);
  const std::vector<std::size_t> y{0, 1, 2, 3, 4, 4, 3, 2, 1};
  const std::vector<double> m{1.0, 0.5, 0.25, 0.8, 0.1};
  double expect = 0.0;
  for (std::size_t i = 0; i < 9; ++i) expect -= m[y[i]] * std::log(p(i, y[i]));
  EXPECT_NEAR(weighted_cls_loss(p, y, m), expect / 9.0, 1e-12);
}

TEST(WeightedCls, Errors) {
  const Tensor2 p = Tensor2::from_rows({{0.5, 0.5, 0.0}});
  EXPECT_THROW(weighted_cls_loss(p, std::vector<std::size_t>{3}, std::vector<double>{1, 1, 1}),
               std::invalid_argument);
  EXPECT_THROW(weighted_cls_loss(p, std::vector<std::size_t>{0, 1}, std::vector<double>{1, 1, 1}),
               std::invalid_argument);
  EXPECT_THROW(weighted_cls_loss(p, std::vector<std::size_t>{0}, std::vector<double>{1, 1}),
               std::invalid_argument);
  EXPECT_THROW(weighted_cls_loss(Tensor2(0, 3), std::vector<std::size_t>{}, std::vector<double>{1, 1, 1}),
               std::invalid_argument);
}

TEST(ConditionalEntropy, HandValues) {
  EXPECT_EQ(conditional_entropy_loss(Tensor2::from_rows({{1, 0, 0}, {0, 0, 1}})), 0.0);
  EXPECT_NEAR(conditional_entropy_loss(Tensor2(3, 6, 1.0 / 6.0)), std::log(6.0), 1e-12);
  EXPECT_NEAR(conditional_entropy_loss(Tensor2::from_rows({{1, 0, 0, 0}, {0.25, 0.25, 0.25, 0.25}})), 0.693147,
              1e-6);
}

// ---- complement entropy ------------------------------------------------------------

TEST(ComplementEntropy, HandValues) {
  EXPECT_EQ(one_sample_wce({1.0, 0.0, 0.0}, 0, 1.0), 0.0);
  EXPECT_NEAR(one_sample_wce({0.6, 0.2, 0.2}, 0, 1.0), -0.4, 1e-9);
  const double uneven = 0.4 * (0.75 * std::log(0.75) + 0.25 * std::log(0.25)) / kLn2;
  EXPECT_NEAR(one_sample_wce({0.6, 0.3, 0.1}, 0, 1.0), uneven, 1e-9);
  EXPECT_NEAR(one_sample_wce({0.6, 0.3, 0.1}, 0, 1.0), -0.32451, 5e-6);
  EXPECT_GT(one_sample_wce({0.6, 0.3, 0.1}, 0, 1.0), one_sample_wce({0.6, 0.2, 0.2}, 0, 1.0));
}

TEST(ComplementEntropy, PerSampleRangeOnRandomSimplexPoints) {
  std::mt19937_64 rng(5);
  for (double xi : {0.5, 1.0, 2.0}) {
    for (std::size_t classes : {3u, 4u, 10u}) {
      const Tensor2 pts = test::random_simplex(10000 / 9 + 1, classes, rng);
      std::uniform_int_distribution<std::size_t> pick(0, classes - 1);
      for (std::size_t r = 0; r < pts.rows(); ++r) {
        const std::vector<double> p(pts.row(r).begin(), pts.row(r).end());
        const std::size_t a = pick(rng);
        const double v = one_sample_wce(p, a, xi);
        EXPECT_LE(v, 0.0);
        EXPECT_GE(v, -std::pow(1.0 - p[a], xi) - 1e-12);
        EXPECT_NEAR(v, oracle_complement(p, a, xi), 1e-12);
      }
    }
  }
}

TEST(ComplementEntropy, UniformComplementMinimizesOnGrid) {
  for (int ia = 1; ia <= 9; ++ia) {
    const double pa = 0.1 * ia;
    int best = -1;
    double best_v = 1.0;
    for (int k = 0; k <= 100; ++k) {
      const double q = 0.01 * k;
      const double v = one_sample_wce({pa, (1.0 - pa) * q, (1.0 - pa) * (1.0 - q)}, 0, 1.0);
      if (v < best_v - 1e-15) {
        best_v = v;
        best = k;
      }
    }
    EXPECT_EQ(best, 50) << "p_a = " << pa;
    EXPECT_NEAR(best_v, -(1.0 - pa), 1e-12);
  }
}

TEST(ComplementEntropy, MovingTowardUniformComplementLowersLoss) {
  std::mt19937_64 rng(6);
  const Tensor2 pts = test::random_simplex(300, 6, rng);
  for (std::size_t r = 0; r < pts.rows(); ++r) {
    std::vector<double> p(pts.row(r).begin(), pts.row(r).end());
    const double rest = 1.0 - p[0];
    std::vector<double> closer = p;
    for (std::size_t j = 1; j < 6; ++j) closer[j] = 0.5 * p[j] + 0.5 * rest / 5.0;
    EXPECT_LE(one_sample_wce(closer, 0, 1.0), one_sample_wce(p, 0, 1.0) + 1e-15);
  }
}

TEST(ComplementEntropy, BatchValueInRangeAndLinearInWeights) {
  std::mt19937_64 rng(7);
  const Tensor2 p = test::random_simplex(16, 5, rng);
  std::vector<std::size_t> y;
  for (std::size_t i = 0; i < 16; ++i) y.push_back((i * 3) % 5);
  const std::vector<double> m{1.0, 0.0, 0.4, 0.9, 0.2};
  const double v = complement_entropy_loss(p, y, m, 1.0);
  EXPECT_LE(v, 0.0);
  EXPECT_GE(v, -1.0);
  double expect = 0.0;
  for (std::size_t i = 0; i < 16; ++i) expect += m[y[i]] * oracle_complement(p.row(i), y[i], 1.0);
  EXPECT_NEAR(v, expect / 16.0, 1e-12);
}

TEST(ComplementEntropy, ConfidenceFactorIsHeldConstantInGradient) {
  std::mt19937_64 rng(8);
  const Tensor2 z = test::random_tensor(4, 5, rng, -2.0, 2.0);
  const std::vector<std::size_t> y{0, 3, 1, 4};
  const std::vector<double> m{1.0, 0.5, 1.0, 0.8, 0.3};
  const double xi = 1.5;

  Graph a;
  const NodeId pa = a.softmax_rows(a.parameter("z", z));
  graph_loss::complement_entropy(a, pa, y, m, xi);
  a.forward();
  const Tensor2& probs = a.value(pa);
  Tensor2 conf(4, 1);
  for (std::size_t i = 0; i < 4; ++i) conf(i, 0) = std::pow(1.0 - probs(i, y[i]), xi);
  const double va = a.value(a.root()).item();
  const GradientMap ga = a.backward();

  Graph b;
  const NodeId pb = b.softmax_rows(b.parameter("z", z));
  graph_loss::complement_entropy(b, pb, y, m, xi, &conf);
  const double vb = b.forward().item();
  const GradientMap gb = b.backward();

  EXPECT_NEAR(va, vb, 1e-14);
  EXPECT_LT(test::max_rel_diff(ga.at("z"), gb.at("z"), 1e-12), 1e-12);

  // With the factor frozen, the gradient is that of a fixed-weight sum.
  auto f = [&](const Tensor2& zz) {
    Graph c;
    graph_loss::complement_entropy(c, c.softmax_rows(c.constant(zz)), y, m, xi, &conf);
    return c.forward().item();
  };
  EXPECT_LT(test::norm_rel_error(gb.at("z"), test::central_difference(f, z)), 1e-6);
}

TEST(ComplementEntropy, Errors) {
  const Tensor2 two = Tensor2::from_rows({{0.5, 0.5}});
  EXPECT_THROW(complement_entropy_loss(two, std::vector<std::size_t>{0}, std::vector<double>{1, 1}, 1.0),
               std::invalid_argument);
  const Tensor2 three = Tensor2::from_rows({{0.5, 0.25, 0.25}});
  EXPECT_THROW(complement_entropy_loss(three, std::vector<std::size_t>{3}, std::vector<double>{1, 1, 1}, 1.0),
               std::invalid_argument);
  EXPECT_THROW(complement_entropy_loss(three, std::vector<std::size_t>{0}, std::vector<double>{1, 1, 1}, -1.0),
               std::invalid_argument);
}

// ---- balanced adversarial -------------------------------------------------------------

TEST(BalancedAdversarial, HandValue) {
  const Tensor2 half4(4, 1, 0.5), ones4(4, 1, 1.0);
  const Tensor2 half1(1, 1, 0.5), ones1(1, 1, 1.0);
  const double v = balanced_adversarial_loss(half4, half4, half1, ones4, ones4, ones1, 0.25);
  EXPECT_NEAR(v, -2.25 * kLn2, 1e-15);
  EXPECT_NEAR(v, -1.559581, 1e-6);
}

TEST(BalancedAdversarial, MatchesOracle) {
  const Tensor2 ds = column({0.9, 0.6, 0.3}), dt = column({0.2, 0.7}), da = column({0.55});
  const Tensor2 ws = column({1.5, 1.2, 0.4}), wt = column({1.9, 1.1}), wa = column({0.8});
  const double rho = 0.4;
  const double expect = (1.5 * std::log(0.9) + 1.2 * std::log(0.6) + 0.4 * std::log(0.3)) / 3.0 +
                        (1.9 * std::log(0.8) + 1.1 * std::log(0.3)) / 2.0 + rho * 0.8 * std::log(0.45);
  EXPECT_NEAR(balanced_adversarial_loss(ds, dt, da, ws, wt, wa, rho), expect, 1e-14);
}

TEST(BalancedAdversarial, ZeroRhoDropsAugmentedTermExactly) {
  const Tensor2 ds = column({0.9, 0.6, 0.3}), dt = column({0.2, 0.7, 0.4});
  const Tensor2 ws = column({1.5, 1.2, 0.4}), wt = column({1.9, 1.1, 1.3});
  const double with_aug = balanced_adversarial_loss(ds, dt, column({0.3}), ws, wt, column({1.7}), 0.0);
  const double without = balanced_adversarial_loss(ds, dt, Tensor2(0, 1), ws, wt, Tensor2(0, 1), 0.0);
  EXPECT_EQ(with_aug, without);
  double s = 0.0, t = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    s += ws[i] * std::log(ds[i]);
    t += wt[i] * std::log(1.0 - dt[i]);
  }
  EXPECT_DOUBLE_EQ(without, s / 3.0 + t / 3.0);
}

TEST(BalancedAdversarial, UnitWeightsGivePlainDomainLoss) {
  const Tensor2 ds = column({0.9, 0.6, 0.3, 0.5}), dt = column({0.2, 0.7, 0.4, 0.1});
  const Tensor2 ones(4, 1, 1.0);
  double s = 0.0, t = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    s += std::log(ds[i]);
    t += std::log(1.0 - dt[i]);
  }
  EXPECT_DOUBLE_EQ(balanced_adversarial_loss(ds, dt, Tensor2(0, 1), ones, ones, Tensor2(0, 1), 0.0),
                   s / 4.0 + t / 4.0);
}

TEST(BalancedAdversarial, LinearInSourceClassWeights) {
  const Tensor2 ds = column({0.9, 0.6, 0.3}), dt = column({0.2, 0.7}), da = column({0.55});
  const Tensor2 w = column({1.5, 1.2, 0.4});
  const std::vector<double> m1{1.0, 0.3, 0.0}, m2{0.2, 1.0, 0.6};
  auto weighted = [&](const std::vector<double>& m) {
    Tensor2 out = w;
    for (std::size_t i = 0; i < 3; ++i) out[i] *= m[i];
    return out;
  };
  auto src_only = [&](const std::vector<double>& m) {
    return balanced_adversarial_loss(ds, dt, da, weighted(m), Tensor2(2, 1, 0.0), Tensor2(1, 1, 0.0), 0.25);
  };
  std::vector<double> mix(3);
  for (std::size_t i = 0; i < 3; ++i) mix[i] = 0.7 * m1[i] + 1.3 * m2[i];
  EXPECT_NEAR(src_only(mix), 0.7 * src_only(m1) + 1.3 * src_only(m2), 1e-14);
}

TEST(BalancedAdversarial, DiscriminatorAscentDoesNotDecreaseValue) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor2 zs = test::random_tensor(6, 1, rng, -2.0, 2.0);
    const Tensor2 zt = test::random_tensor(6, 1, rng, -2.0, 2.0);
    const Tensor2 za = test::random_tensor(2, 1, rng, -2.0, 2.0);
    const Tensor2 ws = test::random_tensor(6, 1, rng, 0.0, 2.0);
    const Tensor2 wt = test::random_tensor(6, 1, rng, 1.0, 2.0);
    const Tensor2 wa = test::random_tensor(2, 1, rng, 0.0, 2.0);
    auto value = [&](const Tensor2& s, const Tensor2& t, const Tensor2& a, GradientMap* grads) {
      Graph g;
      const graph_loss::AdversarialSide src{g.sigmoid(g.parameter("s", s)), g.constant(ws)};
      const graph_loss::AdversarialSide tgt{g.sigmoid(g.parameter("t", t)), g.constant(wt)};
      const graph_loss::AdversarialSide aug{g.sigmoid(g.parameter("a", a)), g.constant(wa)};
      graph_loss::balanced_adversarial(g, src, tgt, &aug, 0.25);
      const double v = g.forward().item();
      if (grads != nullptr) *grads = g.backward();
      return v;
    };
    GradientMap grads;
    const double before = value(zs, zt, za, &grads);
    const double lr = 1e-4;
    auto ascend = [&](Tensor2 x, const Tensor2& gx) {
      for (std::size_t i = 0; i < x.size(); ++i) x[i] += lr * gx[i];
      return x;
    };
    const double after = value(ascend(zs, grads.at("s")), ascend(zt, grads.at("t")), ascend(za, grads.at("a")), nullptr);
    EXPECT_GE(after, before);
  }
}

TEST(BalancedAdversarial, Errors) {
  const Tensor2 s(4, 1, 0.5), w(4, 1, 1.0), empty(0, 1);
  EXPECT_THROW(balanced_adversarial_loss(empty, s, empty, empty, w, empty, 0.0), std::invalid_argument);
  EXPECT_THROW(balanced_adversarial_loss(s, s, empty, w, w, empty, 1.5), std::invalid_argument);
  EXPECT_THROW(balanced_adversarial_loss(s, s, empty, w, w, empty, 0.25), std::invalid_argument);
  EXPECT_THROW(balanced_adversarial_loss(Tensor2(4, 1, 1.0), s, empty, w, w, empty, 0.0), std::invalid_argument);
  EXPECT_THROW(balanced_adversarial_loss(s, s, empty, Tensor2(3, 1, 1.0), w, empty, 0.0), std::invalid_argument);
  EXPECT_NO_THROW(balanced_adversarial_loss(s, s, empty, w, w, empty, 0.2));
}

// ---- combined objective ----------------------------------------------------------------

TEST(TotalObjective, Examples) {
  const LossBreakdown parts{0.7, 1.3, -0.4, -1.2, 0.0};
  EXPECT_EQ(total_objective(parts, 0.0, 0.0, 0.0, ObjectiveMode::kFull), 0.7);
  EXPECT_EQ(total_objective(parts, 0.1, 5.0, 0.5, ObjectiveMode::kEdann),
            total_objective(parts, 0.1, 0.0, 0.5, ObjectiveMode::kFull));
  EXPECT_EQ(total_objective(parts, 0.1, 5.0, 0.5, ObjectiveMode::kBaa),
            total_objective(parts, 0.1, 5.0, 0.5, ObjectiveMode::kEdann));
  EXPECT_NEAR(total_objective(parts, 0.1, 5.0, 0.5, ObjectiveMode::kFull), 0.7 + 0.13 - 2.0 - 0.6, 1e-15);
  EXPECT_TRUE(std::isfinite(total_objective(parts, 0.1, 1.0, 1.0, ObjectiveMode::kFull)));
  EXPECT_THROW(total_objective(parts, -0.1, 1.0, 1.0, ObjectiveMode::kFull), std::invalid_argument);
}

}  // namespace
}  // namespace pda
