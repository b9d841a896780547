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

#ifndef ROTKAM_DYNAMICS_H_
#define ROTKAM_DYNAMICS_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "rotkam/fourier.h"

namespace rotkam {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

// Counter-based stream: the value at `position` depends only on (seed,
// position), so trajectories are reproducible and streams independent.
std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t position);
double counter_uniform(std::uint64_t seed, std::uint64_t position);

// Realized driver state omega. Which fields are meaningful depends on the
// driving system: `angles` for torus rotations, `position`/`symbol` for the
// Bernoulli shift, `time` for almost periodic paths.
struct DriverState {
  std::vector<double> angles;
  std::uint64_t position = 0;
  std::size_t symbol = 0;
  double time = 0.0;

  bool operator==(const DriverState&) const = default;
};

struct TorusRotation {
  std::vector<double> alpha;  // empty: trivial base
};

struct BernoulliShift {
  std::vector<double> probs;
  std::uint64_t seed = 0;
};

// u(t) = rule(t); by default u_j(t) = cos(frequencies_j t + phases_j).
// A map step advances time by `time_step`.
struct AlmostPeriodicPath {
  std::vector<double> frequencies;
  std::vector<double> phases;
  std::function<std::vector<double>(double)> rule;
  double time_step = 1.0;
};

class DrivingSystem {
 public:
  using Kind = std::variant<TorusRotation, BernoulliShift, AlmostPeriodicPath>;

  static DrivingSystem trivial();
  static DrivingSystem torus(std::vector<double> alpha);
  // Throws a validation error unless probs are positive and sum to 1.
  static DrivingSystem bernoulli(std::vector<double> probs, std::uint64_t seed);
  static DrivingSystem almost_periodic(AlmostPeriodicPath path);

  const Kind& kind() const { return kind_; }
  bool is_trivial() const;
  bool is_bernoulli() const;

  // omega0: initial angles (torus) or initial time (first entry, almost
  // periodic). Ignored for the Bernoulli shift, whose state is its seed.
  DriverState initial_state(std::span<const double> omega0 = {}) const;
  DriverState advance(const DriverState& state) const;
  DriverState advance(const DriverState& state, std::uint64_t steps) const;

  std::size_t symbol_at(std::uint64_t position) const;
  std::vector<double> sample(double t) const;

  // Same system with the Bernoulli seed replaced (no-op otherwise).
  DrivingSystem with_seed(std::uint64_t seed) const;

 private:
  explicit DrivingSystem(Kind kind) : kind_(std::move(kind)) {}
  Kind kind_;
  std::vector<double> cumulative_;  // Bernoulli inverse-CDF table
};

// Degree-one lift phi(x, omega) = x + 2 pi rho0 + displacement(x, omega),
// with displacement 2pi-periodic in x.
struct CircleLift {
  double rho0 = 0.0;
  std::function<double(double, const DriverState&)> displacement;
  bool driver_dependent = false;
  // Series form of the displacement over (x, omega angles), when known.
  std::optional<FourierSeries> fourier;

  double displacement_at(double x, const DriverState& omega) const;
  double operator()(double x, const DriverState& omega) const;
};

CircleLift pure_rotation(double rho);
// x + 2 pi Omega + eps sin x. Rejects |eps| >= 1 (not a homeomorphism).
CircleLift make_arnold_family(double omega, double eps);
// Displacement from a scalar series in (x, omega_1, ..., omega_{m-1}).
CircleLift lift_from_fourier(double rho0, FourierSeries displacement);
// g^{-1} o R_rho o g with g(x) = x + a sin x, |a| < 1.
CircleLift conjugated_rotation(double rho, double a);
// phi(x, omega) = maps[omega.symbol](x); for Bernoulli compositions.
CircleLift switched_lift(std::vector<CircleLift> maps);
// Time-`duration` flow map of xdot = f(x, t) started at t0 (RK4, step dt).
CircleLift flow_map(std::function<double(double, double)> f, double t0,
                    double duration, double dt);

// Checks degree one and monotonicity of phi(., omega) on `grid` sample
// points; throws a validation error on failure.
void validate_lift(const CircleLift& lift, const DriverState& omega,
                   int grid = 256);

struct LiftState {
  double x = 0.0;
  DriverState omega;
};

LiftState step(const CircleLift& lift, const DrivingSystem& driver,
               const LiftState& state);

// Value of the cocycle phi(n, omega0) x0. The lift value is kept as whole
// turns plus a phase in [0, 2pi) with compensated phase accumulation.
struct CocycleTrajectory {
  std::uint64_t n = 0;
  double x0 = 0.0;
  std::int64_t turns0 = 0;
  double phase0 = 0.0;
  std::int64_t turns = 0;
  double phase = 0.0;
  DriverState omega;

  double lift_value() const;
  // (phi(n, omega0) x0 - x0) / (2 pi), evaluated without forming the large
  // lift value.
  double winding() const;
};

class CocycleWalker {
 public:
  CocycleWalker(const CircleLift& lift, const DrivingSystem& driver, double x0,
                DriverState omega0);

  void advance(std::uint64_t steps);
  const CocycleTrajectory& trajectory() const { return traj_; }

 private:
  const CircleLift& lift_;
  const DrivingSystem& driver_;
  CocycleTrajectory traj_;
  double carry_ = 0.0;
};

CocycleTrajectory iterate(const CircleLift& lift, const DrivingSystem& driver,
                          double x0, const DriverState& omega0,
                          std::uint64_t n);

struct Spread {
  double sup = 0.0;
  double inf = 0.0;
  double width() const { return sup - inf; }
};

// max and min of phi(n, omega) x - x over `grid` equispaced x in [0, 2pi).
Spread displacement_spread(const CircleLift& lift, const DrivingSystem& driver,
                           const DriverState& omega, int grid,
                           std::uint64_t n = 1);

}  // namespace rotkam

#endif  // ROTKAM_DYNAMICS_H_
