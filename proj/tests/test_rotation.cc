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
#include "rotkam/dynamics.h"
#include "rotkam/errors.h"
#include "rotkam/rotation.h"

namespace rotkam {
namespace {

constexpr double kPi = std::numbers::pi;
const double kGolden = (std::sqrt(5.0) - 1.0) / 2.0;

CircleLift half_turn_map() {
  CircleLift f;
  f.rho0 = 0.5;
  f.displacement = [](double x, const DriverState&) { return 0.5 * std::sin(x); };
  return f;
}

TEST(EstimateMapTest, PureRotationIsExact) {
  const auto d = DrivingSystem::trivial();
  for (double rho : {0.25, kGolden}) {
    for (std::uint64_t n : {2ULL, 3ULL, 1000ULL, 65536ULL}) {
      for (double x0 : {0.0, 1.3, -40.0}) {
        const auto e = estimate_map(pure_rotation(rho), d, x0, {}, n);
        EXPECT_NEAR(e.value, rho, 1e-14);
        EXPECT_EQ(e.convention, Convention::kMap);
        ASSERT_GE(e.diagnostics.size(), 2u);
        EXPECT_EQ(e.diagnostics.size(), e.checkpoints.size());
        EXPECT_EQ(e.diagnostics.back(), e.value);
        EXPECT_EQ(e.checkpoints.back(), static_cast<double>(n));
      }
    }
  }
}

TEST(EstimateMapTest, PeriodTwoMap) {
  const auto e = estimate_map(half_turn_map(), DrivingSystem::trivial(), 0.4, {}, 1 << 16);
  EXPECT_NEAR(e.value, 0.5, 1e-4);
}

TEST(EstimateMapTest, RequiresTwoIterations) {
  EXPECT_THROW(estimate_map(pure_rotation(0.1), DrivingSystem::trivial(), 0.0, {}, 1), Error);
}

TEST(EstimateMapTest, BernoulliWeightedAverage) {
  const auto d = DrivingSystem::bernoulli({0.3, 0.7}, 2024);
  const auto f = switched_lift({pure_rotation(0.1), pure_rotation(0.2)});
  const auto e = estimate_map(f, d, 0.0, d.initial_state(), 1000000);
  EXPECT_NEAR(e.value, 0.17, 3e-3);
}

TEST(EstimateMapTest, IndependentOfStartingPoint) {
  const auto f = make_arnold_family(0.31, 0.8);
  const auto d = DrivingSystem::trivial();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  const std::uint64_t n = 5000;
  for (int trial = 0; trial < 20; ++trial) {
    const double a = u(rng), b = u(rng);
    const double gap = std::ceil(std::abs(a - b) / kTwoPi) * kTwoPi;
    const double diff = std::abs(estimate_map(f, d, a, {}, n).value -
                                 estimate_map(f, d, b, {}, n).value);
    EXPECT_LE(diff, (kTwoPi + gap) / (kTwoPi * n));
  }
}

TEST(EstimateMapTest, InvariantAlongDriverOrbit) {
  FourierSeries p(2, 1);
  p.at({1, 1}) = Complex(0.0, -0.15);
  p.at({-1, -1}) = Complex(0.0, 0.15);
  const auto f = lift_from_fourier(kGolden, p);
  const auto d = DrivingSystem::torus({std::sqrt(2.0) - 1.0});
  const auto w0 = d.initial_state(std::vector<double>{0.4});
  const auto w1 = d.advance(w0);
  const std::uint64_t n = 20000;
  // |phi(x, omega) - x| <= 2 pi rho0 + 0.3.
  const double max_disp = kTwoPi * kGolden + 0.3;
  const double a = estimate_map(f, d, 0.0, w0, n).value;
  const double b = estimate_map(f, d, 0.0, w1, n).value;
  EXPECT_LE(std::abs(a - b), 2.0 * max_disp / (kTwoPi * n));
}

TEST(EstimateMapTest, MonotoneInTheMap) {
  const auto d = DrivingSystem::bernoulli({0.4, 0.6}, 8);
  const std::uint64_t n = 20000;
  for (double shift : {0.0, 0.01, 0.2}) {
    const auto lo = switched_lift({make_arnold_family(0.1, 0.5), make_arnold_family(0.3, 0.2)});
    const auto hi = switched_lift({make_arnold_family(0.1 + shift, 0.5),
                                   make_arnold_family(0.3 + shift, 0.2)});
    EXPECT_GE(estimate_map(hi, d, 0.0, d.initial_state(), n).value,
              estimate_map(lo, d, 0.0, d.initial_state(), n).value - 2.0 / n);
  }
}

TEST(EnclosureTest, Examples) {
  const auto r = deterministic_enclosure(pure_rotation(0.3), 100);
  ASSERT_TRUE(r.enclosure);
  EXPECT_NEAR(r.enclosure->first, 0.29, 1e-15);
  EXPECT_NEAR(r.enclosure->second, 0.31, 1e-15);

  const auto h = deterministic_enclosure(half_turn_map(), 1000);
  EXPECT_NEAR(h.enclosure->second - h.enclosure->first, 0.002, 1e-15);
  EXPECT_LE(h.enclosure->first, 0.5);
  EXPECT_GE(h.enclosure->second, 0.5);
}

TEST(EnclosureTest, ArnoldMatchesLongIterationOracle) {
  const auto a = deterministic_enclosure(make_arnold_family(0.2, 0.3), 100000);
  const double width = a.enclosure->second - a.enclosure->first;
  EXPECT_NEAR(width, 2e-5, 1e-15);
  const std::uint64_t n = 10000000;
  const long double end = oracle::iterate_lift(
      [](long double x) { return x + 2.0L * std::numbers::pi_v<long double> * 0.2L + 0.3L * std::sin(x); },
      0.0L, n);
  const double oracle_rho = static_cast<double>(end / (2.0L * std::numbers::pi_v<long double> * n));
  EXPECT_LE(std::abs(a.value - oracle_rho), width);
}

TEST(EnclosureTest, NestedAndShrinking) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> om(0.0, 1.0), ep(-0.9, 0.9);
  for (int trial = 0; trial < 10; ++trial) {
    const auto f = make_arnold_family(om(rng), ep(rng));
    for (std::uint64_t m : {100ULL, 1000ULL}) {
      const auto a = *deterministic_enclosure(f, m).enclosure;
      const auto b = *deterministic_enclosure(f, 2 * m).enclosure;
      EXPECT_LE(std::max(a.first, b.first), std::min(a.second, b.second));
      EXPECT_NEAR(b.second - b.first, 1.0 / m, 1e-12);
    }
  }
}

TEST(EnclosureTest, DriverDependentLiftUnsupported) {
  const auto f = switched_lift({pure_rotation(0.1)});
  try {
    deterministic_enclosure(f, 10);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kUnsupported);
  }
}

TEST(PredictedIidTest, Examples) {
  EXPECT_NEAR(predicted_iid_rotation(std::vector<double>{0.1, 0.2}, std::vector<double>{0.3, 0.7}), 0.17, 1e-15);
  EXPECT_EQ(predicted_iid_rotation(std::vector<double>{0.42}, std::vector<double>{1.0}), 0.42);
  EXPECT_NEAR(predicted_iid_rotation(std::vector<double>{0.5, 0.5, 0.5}, std::vector<double>{0.2, 0.3, 0.5}), 0.5, 1e-15);
  EXPECT_THROW(predicted_iid_rotation(std::vector<double>{0.1}, std::vector<double>{0.5, 0.5}), Error);
  EXPECT_THROW(predicted_iid_rotation(std::vector<double>{0.1, 0.2}, std::vector<double>{0.5, 0.6}), Error);
}

TEST(IidCompositionTest, CommutingRotations) {
  const std::vector<CircleLift> maps{pure_rotation(0.1), pure_rotation(0.2)};
  const std::vector<double> probs{0.5, 0.5};
  const auto e = estimate_iid_composition(maps, probs, 77, 100000, 8, 2);
  EXPECT_NEAR(e.value, 0.15, 2e-3);
  ASSERT_TRUE(e.std_dev);
  EXPECT_LE(std::abs(e.value - 0.15), 3.0 * *e.std_dev + 1e-12);
}

TEST(IidCompositionTest, ConjugatedRotationsShareInvariantMeasure) {
  const std::vector<CircleLift> maps{conjugated_rotation(0.1, 0.5), conjugated_rotation(0.2, 0.5)};
  const std::vector<double> rhos{0.1, 0.2};
  const std::vector<double> probs{0.3, 0.7};
  const auto e = estimate_iid_composition(maps, probs, 5, 100000, 8, 2);
  const double want = predicted_iid_rotation(rhos, probs);
  EXPECT_NEAR(e.value, want, 5e-3);
  EXPECT_LE(std::abs(e.value - want), 3.0 * *e.std_dev + 1e-12);
}

TEST(IidCompositionTest, DeterministicAcrossJobCounts) {
  const std::vector<CircleLift> maps{pure_rotation(0.1), make_arnold_family(0.2, 0.4)};
  const std::vector<double> probs{0.5, 0.5};
  const auto a = estimate_iid_composition(maps, probs, 9, 5000, 4, 1);
  const auto b = estimate_iid_composition(maps, probs, 9, 5000, 4, 3);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(*a.std_dev, *b.std_dev);
}

TEST(IidCompositionTest, RejectsBadInputs) {
  const std::vector<CircleLift> maps{pure_rotation(0.1)};
  const std::vector<double> probs{1.0};
  EXPECT_THROW(estimate_iid_composition(maps, probs, 1, 0, 1), Error);
  const std::vector<double> bad{0.7};
  EXPECT_THROW(estimate_iid_composition(maps, bad, 1, 100, 1), Error);
}

TEST(OdeTest, ConstantField) {
  OdeField f{[](double, double) { return 0.83; }, 1.0};
  EXPECT_NEAR(estimate_ode(f, 0.3, 50.0, 0.01).value, 0.83, 1e-12);
}

TEST(OdeTest, AutonomousCosineMatchesQuadrature) {
  const double period = oracle::simpson([](double x) { return 1.0 / (2.0 + std::cos(x)); },
                                        0.0, 2.0 * kPi, 1e-14);
  const double want = 2.0 * kPi / period;
  EXPECT_NEAR(want, std::sqrt(3.0), 1e-12);
  OdeField f{[](double x, double) { return 2.0 + std::cos(x); }, 1.0};
  const double T = 1e4;
  const auto a = estimate_ode(f, 0.0, T, 1e-3);
  EXPECT_NEAR(a.value, want, 1e-6);
  EXPECT_EQ(a.convention, Convention::kOde);
  const auto b = estimate_ode(f, 1.7, T, 1e-3);
  EXPECT_NEAR(a.value, b.value, kTwoPi / T);
  ASSERT_TRUE(a.unweighted);
  EXPECT_NEAR(*a.unweighted, want, kTwoPi / T);
}

TEST(OdeTest, StepSizePrecondition) {
  OdeField f{[](double x, double) { return std::cos(x); }, 10.0};
  try {
    estimate_ode(f, 0.0, 100.0, 0.05);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfiguration);
  }
  EXPECT_THROW(estimate_ode(f, 0.0, 0.05, 0.01), Error);
}

TEST(OdeTest, ConventionsDifferByTwoPi) {
  const double c = 0.3;
  OdeField f{[c](double, double) { return kTwoPi * c; }, 1.0};
  EXPECT_NEAR(estimate_ode(f, 0.0, 100.0, 0.01).value, kTwoPi * c, 1e-12);
  const auto time_one = flow_map([c](double, double) { return kTwoPi * c; }, 0.0, 1.0, 0.01);
  EXPECT_NEAR(estimate_map(time_one, DrivingSystem::trivial(), 0.0, {}, 1000).value, c, 1e-12);
}

TEST(PlanarTest, ConstantRotationField) {
  const double beta = 1.3;
  PlanarSystem s{[beta](std::array<double, 2> x, std::span<const double>) {
                   return std::array<double, 2>{-beta * x[1], beta * x[0]};
                 },
                 beta};
  const auto u = DrivingSystem::trivial();
  EXPECT_NEAR(estimate_planar_homogeneous(s, u, 0.2, 100.0, 0.01).value, beta, 1e-12);
}

TEST(PlanarTest, ModulatedRotationAveragesOut) {
  PlanarSystem s{[](std::array<double, 2> x, std::span<const double> u) {
                   const double w = 1.0 + 0.1 * u[0];
                   return std::array<double, 2>{-w * x[1], w * x[0]};
                 },
                 1.1};
  AlmostPeriodicPath path;
  path.frequencies = {1.0};
  path.phases = {0.0};
  const auto u = DrivingSystem::almost_periodic(path);
  const double T = 2000.0;
  const auto a = estimate_planar_homogeneous(s, u, 0.0, T, 0.01);
  const auto b = estimate_planar_homogeneous(s, u, 2.0, T, 0.01);
  EXPECT_NEAR(a.value, 1.0, 1e-6);
  EXPECT_NEAR(a.value, b.value, kTwoPi / T);
}

TEST(ContinuityTest, Examples) {
  const auto d = DrivingSystem::trivial();
  const auto rot = [](double s) { return pure_rotation(s); };
  const auto p = continuity_probe(rot, d, 0.2, 0.01, 1000);
  EXPECT_NEAR(p.delta, 0.01, 1e-14);
  EXPECT_TRUE(p.monotone_consistent);
  EXPECT_EQ(continuity_probe(rot, d, 0.2, 0.0, 1000).delta, 0.0);

  const auto arnold = [](double s) { return make_arnold_family(s, 0.3); };
  const auto q = continuity_probe(arnold, d, 0.37, 1e-3, 100000);
  EXPECT_GE(q.delta, -2.0 / 100000);
  EXPECT_LE(q.delta, 0.05);
  EXPECT_TRUE(q.monotone_consistent);
}

TEST(ContinuityTest, RejectsNonMonotoneFamily) {
  const auto bad = [](double s) { return pure_rotation(-s); };
  try {
    continuity_probe(bad, DrivingSystem::trivial(), 0.1, 0.1, 100);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kValidation);
  }
}

}  // namespace
}  // namespace rotkam
