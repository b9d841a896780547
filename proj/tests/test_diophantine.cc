// Copyright 2026 The rotkam Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "oracles.h"
#include "rotkam/diophantine.h"
#include "rotkam/errors.h"

namespace rotkam {
namespace {

const double kGolden = (std::sqrt(5.0) - 1.0) / 2.0;

TEST(CertifyTest, ExactResonanceAtHalf) {
  const std::vector<double> mu{0.5};
  const auto c = certify(mu, 1.0, 4);
  EXPECT_EQ(c.C_best, 0.0);
  EXPECT_TRUE(c.resonant());
  EXPECT_EQ(c.worst_k, (std::vector<int>{2}));
  EXPECT_EQ(c.K_checked, 4);
}

TEST(CertifyTest, ZeroFrequencyResonatesAtOne) {
  const std::vector<double> mu{0.0};
  const auto c = certify(mu, 1.0, 1);
  EXPECT_EQ(c.C_best, 0.0);
  EXPECT_EQ(c.worst_k, (std::vector<int>{1}));
}

TEST(CertifyTest, GoldenMeanWorstModeIsFibonacci) {
  const std::vector<double> mu{kGolden};
  const auto c = certify(mu, 1.0, 1000);
  int argmin = 0;
  const double want = oracle::scaled_divisor_min_1d(kGolden, 1.0, 1000, &argmin);
  EXPECT_GT(c.C_best, 0.0);
  EXPECT_NEAR(c.C_best, want, 1e-13);
  ASSERT_EQ(c.worst_k.size(), 1u);
  EXPECT_EQ(c.worst_k[0], argmin);
  EXPECT_TRUE(oracle::is_fibonacci(c.worst_k[0]));
}

TEST(CertifyTest, WorstModeAttainsTheMinimum) {
  const std::vector<double> mu{kGolden, std::sqrt(2.0) - 1.0};
  const auto c = certify(mu, 2.0, 60);
  const double l1 = std::abs(c.worst_k[0]) + std::abs(c.worst_k[1]);
  EXPECT_NEAR(small_divisor(mu, c.worst_k) * std::pow(l1, 2.0), c.C_best, 1e-15);
  const std::vector<int> neg{-c.worst_k[0], -c.worst_k[1]};
  EXPECT_NEAR(small_divisor(mu, neg), small_divisor(mu, c.worst_k), 1e-16);
  // Brute force over the full lattice, no symmetry reduction.
  double best = INFINITY;
  for (int a = -60; a <= 60; ++a) {
    for (int b = -60; b <= 60; ++b) {
      const int n = std::abs(a) + std::abs(b);
      if (n == 0 || n > 60) continue;
      long double t = static_cast<long double>(a) * mu[0] + static_cast<long double>(b) * mu[1];
      t -= std::round(t);
      const double d = static_cast<double>(2.0L * std::abs(std::sin(std::numbers::pi_v<long double> * t)));
      best = std::min(best, d * std::pow(n, 2.0));
    }
  }
  EXPECT_NEAR(c.C_best, best, 1e-12 * std::max(1.0, best));
}

TEST(CertifyTest, MonotoneInOrder) {
  const std::vector<double> mu{std::sqrt(3.0) - 1.0, 0.1234567};
  double prev = INFINITY;
  for (int K : {1, 2, 5, 10, 20, 40, 80}) {
    const double c = certify(mu, 2.0, K).C_best;
    EXPECT_LE(c, prev);
    prev = c;
  }
}

TEST(CertifyTest, BudgetExceededReportsLargestFeasibleOrder) {
  const std::vector<double> mu{0.1, 0.2, 0.3};
  try {
    certify(mu, 3.0, 1000, 1e6);
    FAIL();
  } catch (const BudgetExceededError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kBudgetExceeded);
    const int k = e.largest_completed();
    EXPECT_GE(k, 1);
    EXPECT_LE(3.0 * std::pow(2 * k + 1, 3), 1e6);
    EXPECT_GT(3.0 * std::pow(2 * k + 3, 3), 1e6);
  }
}

TEST(CertifyTest, RejectsBadArguments) {
  const std::vector<double> mu{0.3};
  EXPECT_THROW(certify(mu, 0.0, 5), Error);
  EXPECT_THROW(certify(mu, 1.0, 0), Error);
  EXPECT_THROW(certify(std::vector<double>{}, 1.0, 5), Error);
}

TEST(SmallDivisorTest, ChordArcIdentity) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int i = 0; i < 10000; ++i) {
    const double th = u(rng);
    EXPECT_NEAR(oracle::chord(2.0 * oracle::kPi * th), 2.0 * std::abs(std::sin(oracle::kPi * th)), 1e-15);
  }
}

TEST(SmallDivisorTest, MatchesExtendedPrecisionReference) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::uniform_int_distribution<int> kd(-50, 50);
  for (int i = 0; i < 10000; ++i) {
    const std::vector<double> mu{u(rng), u(rng)};
    const std::vector<int> k{kd(rng), kd(rng)};
    long double t = static_cast<long double>(mu[0]) * k[0] + static_cast<long double>(mu[1]) * k[1];
    t -= std::round(t);
    const double want = static_cast<double>(2.0L * std::abs(std::sin(std::numbers::pi_v<long double> * t)));
    EXPECT_NEAR(small_divisor(mu, k), want, 1e-15);
  }
}

TEST(ResonanceScreenTest, Examples) {
  const auto third = resonance_screen(std::vector<double>{1.0 / 3.0}, 5);
  ASSERT_EQ(third.size(), 1u);
  EXPECT_EQ(third[0], (std::vector<int>{3}));
  EXPECT_TRUE(resonance_screen(std::vector<double>{std::sqrt(2.0) - 1.0}, 1000).empty());
  const auto pair = resonance_screen(std::vector<double>{0.25, 0.75}, 4);
  bool found = false;
  for (const auto& k : pair) {
    found = found || k == std::vector<int>{2, 2};
    const double t = 0.25 * k[0] + 0.75 * k[1];
    EXPECT_LT(std::abs(t - std::round(t)), 1e-9);
  }
  EXPECT_TRUE(found);
}

TEST(QuadraticIrrationalTest, Catalog) {
  EXPECT_DOUBLE_EQ(suggest_quadratic_irrational(0), kGolden);
  EXPECT_NEAR(suggest_quadratic_irrational(0), 0.6180339887, 1e-10);
  EXPECT_NEAR(suggest_quadratic_irrational(1), 0.4142135624, 1e-10);
  try {
    suggest_quadratic_irrational(99);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kLookup);
  }
  EXPECT_EQ(default_certificate_order(1), 1000);
  EXPECT_EQ(default_certificate_order(2), 100);
}

}  // namespace
}  // namespace rotkam
