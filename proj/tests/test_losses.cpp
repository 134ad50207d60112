#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "vpet/losses.hpp"

using namespace vpet::train;

namespace {

using Vec = std::vector<double>;

double weighted(const Vec& p, const Vec& t) { return weighted_l2_loss<double>(p, t); }

Vec random_vec(std::size_t n, std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vec v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

/// (N x 2) class distributions with P(real) in [0.1, 0.9].
Vec random_distributions(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.1, 0.9);
  Vec v(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    v[2 * i + kRealClass] = u(rng);
    v[2 * i + 1 - kRealClass] = 1.0 - v[2 * i + kRealClass];
  }
  return v;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(1e-12, std::abs(a) + std::abs(b)); }

/// Central differences of f over every element of x (step 1e-3).
template <typename F>
double worst_fd_error(Vec x, const Vec& analytic, F f) {
  constexpr double h = 1e-3;
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double fp = f(x);
    x[i] = orig - h;
    const double fm = f(x);
    x[i] = orig;
    worst = std::max(worst, rel_err((fp - fm) / (2 * h), analytic[i]));
  }
  return worst;
}

}  // namespace

TEST(WeightedL2, WorkedExamples) {
  EXPECT_EQ(weighted({0.5, 0.5}, {0.0, 1.0}), 0.125);
  EXPECT_EQ(weighted({0.3, 0.9}, {0.3, 0.9}), 0.0);
  EXPECT_EQ(weighted({0.7, 0.1, 0.4}, {0.0, 0.0, 0.0}), 0.0);
}

TEST(WeightedL2, OracleAndNonNegativity) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec p = random_vec(37, rng), t = random_vec(37, rng);
    double oracle = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) oracle += t[i] * (p[i] - t[i]) * (p[i] - t[i]);
    oracle /= static_cast<double>(p.size());
    EXPECT_NEAR(weighted(p, t), oracle, 1e-15);
    EXPECT_GE(weighted(p, t), 0.0);
  }
}

TEST(SplitSuvLoss, WorkedExample) {
  const Vec p{0.2, 0.4}, t{0.1, 0.5};
  const double low = 0.1 * (0.2 - 0.1) * (0.2 - 0.1);
  const double high = 0.5 * (0.4 - 0.5) * (0.4 - 0.5);
  EXPECT_EQ(split_suv_loss<double>(p, t, 0.125), low + high);
  EXPECT_NEAR(split_suv_loss<double>(p, t, 0.125), 0.006, 1e-15);
}

TEST(SplitSuvLoss, EmptyHighSubsetGivesLowTerm) {
  const Vec p{0.05, 0.2, 0.0}, t{0.1, 0.05, 0.125};
  EXPECT_EQ(split_suv_loss<double>(p, t, 0.125), weighted(p, t));
  EXPECT_EQ(split_suv_loss<double>(t, t, 0.125), 0.0);
}

TEST(SplitSuvLoss, BoundaryValueCountsAsLow) {
  const Vec p{0.0, 0.0}, t{0.125, 0.5};
  EXPECT_DOUBLE_EQ(split_suv_loss<double>(p, t, 0.125), 0.125 * 0.125 * 0.125 + 0.5 * 0.25);
}

TEST(Adversarial, WorkedExamples) {
  const Vec half{0.5, 0.5};
  const AdversarialLosses l = adversarial_losses<double>(half, half);
  EXPECT_NEAR(l.discriminator, 2.0 * std::log(2.0), 1e-15);
  EXPECT_NEAR(l.generator, std::log(2.0), 1e-15);

  const Vec real_sure{0.0, 1.0}, fake_sure{1.0, 0.0};
  const AdversarialLosses perfect = adversarial_losses<double>(real_sure, fake_sure);
  EXPECT_LT(perfect.discriminator, 1e-6);
  EXPECT_TRUE(std::isfinite(perfect.generator));
  EXPECT_LT(adversarial_losses<double>(real_sure, real_sure).generator, 1e-6);
}

TEST(GeneratorObjective, WorkedExamples) {
  const Vec p{0.2, 0.4}, t{0.1, 0.5}, half{0.5, 0.5}, fooled{0.0, 1.0};
  EXPECT_NEAR(generator_objective<double>(t, t, half, 20.0, 0.125), std::log(2.0), 1e-15);
  EXPECT_NEAR(generator_objective<double>(p, t, half, 0.0, 0.125), std::log(2.0), 1e-15);
  EXPECT_LT(generator_objective<double>(t, t, fooled, 20.0, 0.125), 1e-6);
  EXPECT_NEAR(generator_objective<double>(p, t, half, 20.0, 0.125), std::log(2.0) + 20.0 * 0.006, 1e-14);
}

TEST(LossGradients, MatchCentralDifferencesOn8x8Batches) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    const Vec t = random_vec(4 * 64, rng);
    const Vec p = random_vec(4 * 64, rng);
    Vec g(p.size());

    weighted_l2_loss<double>(p, t, g);
    EXPECT_LT(worst_fd_error(p, g, [&](const Vec& x) { return weighted(x, t); }), 1e-4);

    split_suv_loss<double>(p, t, 0.125, g);
    EXPECT_LT(worst_fd_error(p, g, [&](const Vec& x) { return split_suv_loss<double>(x, t, 0.125); }), 1e-4);

    const Vec d_fake = random_distributions(4, rng);
    Vec g_fake(d_fake.size());
    generator_objective<double>(p, t, d_fake, 20.0, 0.125, g, g_fake);
    EXPECT_LT(worst_fd_error(p, g, [&](const Vec& x) { return generator_objective<double>(x, t, d_fake, 20.0, 0.125); }),
              1e-4);
    // Only the real-class column enters the objective; perturb it alone.
    auto obj_of_real = [&](const Vec& df) { return generator_objective<double>(p, t, df, 20.0, 0.125); };
    for (std::size_t i = 0; i < 4; ++i) {
      Vec df = d_fake;
      const double h = 1e-3;
      const std::size_t k = 2 * i + kRealClass;
      df[k] += h;
      const double fp = obj_of_real(df);
      df[k] -= 2 * h;
      const double fm = obj_of_real(df);
      EXPECT_LT(rel_err((fp - fm) / (2 * h), g_fake[k]), 1e-4);
    }
  }
}

TEST(LossGradients, DiscriminatorTermsMatchCentralDifferences) {
  std::mt19937_64 rng(13);
  const Vec real = random_distributions(8, rng), fake = random_distributions(8, rng);
  Vec gr(real.size()), gf(fake.size()), gg(fake.size());
  adversarial_losses<double>(real, fake, gr, gf, gg);
  const double h = 1e-3;
  for (std::size_t i = 0; i < 8; ++i) {
    const std::size_t k = 2 * i + kRealClass;
    Vec r = real;
    r[k] += h;
    const double dp = adversarial_losses<double>(r, fake).discriminator;
    r[k] -= 2 * h;
    const double dm = adversarial_losses<double>(r, fake).discriminator;
    EXPECT_LT(rel_err((dp - dm) / (2 * h), gr[k]), 1e-4);

    Vec f = fake;
    f[k] += h;
    const AdversarialLosses fp = adversarial_losses<double>(real, f);
    f[k] -= 2 * h;
    const AdversarialLosses fm = adversarial_losses<double>(real, f);
    EXPECT_LT(rel_err((fp.discriminator - fm.discriminator) / (2 * h), gf[k]), 1e-4);
    EXPECT_LT(rel_err((fp.generator - fm.generator) / (2 * h), gg[k]), 1e-4);
  }
}
