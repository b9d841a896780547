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

#include "rotkam/dynamics.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <limits>
#include <memory>
#include <string>

#include "rotkam/errors.h"

namespace rotkam {
namespace {

constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double wrap_angle(double a) {
  a = std::fmod(a, kTwoPi);
  return a < 0.0 ? a + kTwoPi : a;
}

void split_lift_value(double x, std::int64_t& turns, double& phase) {
  const double k = std::floor(x / kTwoPi);
  turns = static_cast<std::int64_t>(k);
  phase = x - k * kTwoPi;
  if (phase >= kTwoPi) {
    phase -= kTwoPi;
    ++turns;
  } else if (phase < 0.0) {
    phase += kTwoPi;
    --turns;
  }
}

double rk4_advance(const std::function<double(double, double)>& f, double x,
                   double t, double duration, double dt) {
  const auto steps =
      static_cast<std::int64_t>(std::ceil(duration / dt - 1e-12));
  const double h = steps > 0 ? duration / steps : 0.0;
  for (std::int64_t i = 0; i < steps; ++i) {
    const double k1 = f(x, t);
    const double k2 = f(x + 0.5 * h * k1, t + 0.5 * h);
    const double k3 = f(x + 0.5 * h * k2, t + 0.5 * h);
    const double k4 = f(x + h * k3, t + h);
    x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t += h;
  }
  return x;
}

}  // namespace

std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t position) {
  return mix64(mix64(seed) + (position + 1) * kGoldenGamma);
}

double counter_uniform(std::uint64_t seed, std::uint64_t position) {
  return static_cast<double>(counter_hash(seed, position) >> 11) * 0x1.0p-53;
}

DrivingSystem DrivingSystem::trivial() { return DrivingSystem(TorusRotation{}); }

DrivingSystem DrivingSystem::torus(std::vector<double> alpha) {
  return DrivingSystem(TorusRotation{std::move(alpha)});
}

DrivingSystem DrivingSystem::bernoulli(std::vector<double> probs,
                                       std::uint64_t seed) {
  if (probs.empty()) {
    throw Error(ErrorKind::kValidation, "Bernoulli shift needs symbols");
  }
  for (double p : probs) {
    if (!(p > 0.0)) {
      throw Error(ErrorKind::kValidation,
                  "Bernoulli probabilities must be strictly positive");
    }
  }
  const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-12) {
    throw Error(ErrorKind::kValidation,
                "Bernoulli probabilities must sum to 1");
  }
  DrivingSystem out(BernoulliShift{probs, seed});
  out.cumulative_.resize(probs.size());
  std::partial_sum(probs.begin(), probs.end(), out.cumulative_.begin());
  out.cumulative_.back() = 1.0;
  return out;
}

DrivingSystem DrivingSystem::almost_periodic(AlmostPeriodicPath path) {
  if (!path.rule) {
    if (path.phases.empty()) path.phases.assign(path.frequencies.size(), 0.0);
    if (path.phases.size() != path.frequencies.size()) {
      throw Error(ErrorKind::kValidation,
                  "almost periodic path: phases and frequencies differ in "
                  "length");
    }
    path.rule = [freq = path.frequencies, ph = path.phases](double t) {
      std::vector<double> u(freq.size());
      for (std::size_t j = 0; j < freq.size(); ++j) {
        u[j] = std::cos(freq[j] * t + ph[j]);
      }
      return u;
    };
  }
  return DrivingSystem(std::move(path));
}

bool DrivingSystem::is_trivial() const {
  const auto* t = std::get_if<TorusRotation>(&kind_);
  return t != nullptr && t->alpha.empty();
}

bool DrivingSystem::is_bernoulli() const {
  return std::holds_alternative<BernoulliShift>(kind_);
}

DriverState DrivingSystem::initial_state(std::span<const double> omega0) const {
  DriverState s;
  if (const auto* t = std::get_if<TorusRotation>(&kind_)) {
    s.angles.assign(t->alpha.size(), 0.0);
    if (!omega0.empty()) {
      if (omega0.size() != t->alpha.size()) {
        throw Error(ErrorKind::kValidation,
                    "initial angles do not match the base torus dimension");
      }
      for (std::size_t j = 0; j < omega0.size(); ++j) {
        s.angles[j] = wrap_angle(omega0[j]);
      }
    }
  } else if (is_bernoulli()) {
    s.symbol = symbol_at(0);
  } else if (!omega0.empty()) {
    s.time = omega0[0];
  }
  return s;
}

DriverState DrivingSystem::advance(const DriverState& state) const {
  DriverState next = state;
  ++next.position;
  if (const auto* t = std::get_if<TorusRotation>(&kind_)) {
    for (std::size_t j = 0; j < t->alpha.size(); ++j) {
      next.angles[j] = wrap_angle(next.angles[j] + kTwoPi * t->alpha[j]);
    }
  } else if (is_bernoulli()) {
    next.symbol = symbol_at(next.position);
  } else {
    next.time += std::get<AlmostPeriodicPath>(kind_).time_step;
  }
  return next;
}

DriverState DrivingSystem::advance(const DriverState& state,
                                   std::uint64_t steps) const {
  DriverState s = state;
  for (std::uint64_t i = 0; i < steps; ++i) s = advance(s);
  return s;
}

std::size_t DrivingSystem::symbol_at(std::uint64_t position) const {
  const auto* b = std::get_if<BernoulliShift>(&kind_);
  if (b == nullptr) return 0;
  const double u = counter_uniform(b->seed, position);
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  return std::min<std::size_t>(it - cumulative_.begin(), cumulative_.size() - 1);
}

std::vector<double> DrivingSystem::sample(double t) const {
  const auto* a = std::get_if<AlmostPeriodicPath>(&kind_);
  if (a == nullptr) return {};
  return a->rule(t);
}

DrivingSystem DrivingSystem::with_seed(std::uint64_t seed) const {
  DrivingSystem out = *this;
  if (auto* b = std::get_if<BernoulliShift>(&out.kind_)) b->seed = seed;
  return out;
}

double CircleLift::displacement_at(double x, const DriverState& omega) const {
  if (!displacement) return 0.0;
  const double d = displacement(x, omega);
  if (!std::isfinite(d)) {
    throw Error(ErrorKind::kEvaluation,
                "lift displacement is not finite at x = " + std::to_string(x));
  }
  return d;
}

double CircleLift::operator()(double x, const DriverState& omega) const {
  return x + kTwoPi * rho0 + displacement_at(x, omega);
}

CircleLift pure_rotation(double rho) {
  CircleLift lift;
  lift.rho0 = rho;
  return lift;
}

CircleLift make_arnold_family(double omega, double eps) {
  if (!(std::abs(eps) < 1.0)) {
    throw Error(ErrorKind::kValidation,
                "Arnold family with |eps| >= 1 is not a homeomorphism");
  }
  CircleLift lift;
  lift.rho0 = omega;
  if (eps != 0.0) {
    lift.displacement = [eps](double x, const DriverState&) {
      return eps * std::sin(x);
    };
    FourierSeries q(1, 1);
    q.at({1}) = Complex(0.0, -0.5 * eps);
    q.at({-1}) = Complex(0.0, 0.5 * eps);
    lift.fourier = std::move(q);
  }
  return lift;
}

CircleLift lift_from_fourier(double rho0, FourierSeries displacement) {
  if (displacement.value_dim() != 1) {
    throw Error(ErrorKind::kValidation,
                "lift displacement must be a scalar series");
  }
  CircleLift lift;
  lift.rho0 = rho0;
  lift.driver_dependent = displacement.dim() > 1;
  const int m = displacement.dim();
  auto series = std::make_shared<const FourierSeries>(displacement);
  lift.displacement = [series, m](double x, const DriverState& omega) {
    if (static_cast<int>(omega.angles.size()) != m - 1) {
      throw Error(ErrorKind::kEvaluation,
                  "driver state has " + std::to_string(omega.angles.size()) +
                      " angles, series expects " + std::to_string(m - 1));
    }
    double z[8];
    std::vector<double> big;
    double* point = z;
    if (m > 8) {
      big.resize(m);
      point = big.data();
    }
    point[0] = x;
    std::copy(omega.angles.begin(), omega.angles.end(), point + 1);
    return series->evaluate(std::span<const double>(point, m)).real();
  };
  lift.fourier = std::move(displacement);
  return lift;
}

CircleLift conjugated_rotation(double rho, double a) {
  if (!(std::abs(a) < 1.0)) {
    throw Error(ErrorKind::kValidation,
                "conjugating map x + a sin x needs |a| < 1");
  }
  auto g_inverse = [a](double y) {
    double x = y;
    for (int i = 0; i < 60; ++i) {
      const double dx = (x + a * std::sin(x) - y) / (1.0 + a * std::cos(x));
      x -= dx;
      if (std::abs(dx) < 1e-16 * (1.0 + std::abs(x))) break;
    }
    return x;
  };
  CircleLift lift;
  lift.rho0 = rho;
  lift.displacement = [a, rho, g_inverse](double x, const DriverState&) {
    const double shifted = x + a * std::sin(x) + kTwoPi * rho;
    return g_inverse(shifted) - x - kTwoPi * rho;
  };
  return lift;
}

CircleLift switched_lift(std::vector<CircleLift> maps) {
  if (maps.empty()) {
    throw Error(ErrorKind::kValidation, "switched lift needs maps");
  }
  CircleLift lift;
  lift.driver_dependent = true;
  lift.displacement = [maps = std::move(maps)](double x,
                                               const DriverState& omega) {
    const auto& f = maps.at(omega.symbol);
    return kTwoPi * f.rho0 + f.displacement_at(x, omega);
  };
  return lift;
}

CircleLift flow_map(std::function<double(double, double)> f, double t0,
                    double duration, double dt) {
  if (!(dt > 0.0) || !(duration >= 0.0)) {
    throw Error(ErrorKind::kConfiguration, "flow map needs dt > 0");
  }
  CircleLift lift;
  lift.displacement = [f = std::move(f), t0, duration, dt](
                          double x, const DriverState&) {
    return rk4_advance(f, x, t0, duration, dt) - x;
  };
  return lift;
}

void validate_lift(const CircleLift& lift, const DriverState& omega, int grid) {
  double prev = -std::numeric_limits<double>::infinity();
  for (int j = 0; j <= grid; ++j) {
    const double x = kTwoPi * j / grid;
    const double fx = lift(x, omega);
    const double shifted = lift(x + kTwoPi, omega);
    if (std::abs(shifted - fx - kTwoPi) > 1e-10) {
      throw Error(ErrorKind::kValidation,
                  "lift is not of degree one near x = " + std::to_string(x));
    }
    if (fx < prev) {
      throw Error(ErrorKind::kValidation,
                  "lift is not monotone near x = " + std::to_string(x));
    }
    prev = fx;
  }
}

LiftState step(const CircleLift& lift, const DrivingSystem& driver,
               const LiftState& state) {
  return {lift(state.x, state.omega), driver.advance(state.omega)};
}

double CocycleTrajectory::lift_value() const {
  return static_cast<double>(turns) * kTwoPi + phase;
}

double CocycleTrajectory::winding() const {
  return static_cast<double>(turns - turns0) + (phase - phase0) / kTwoPi;
}

CocycleWalker::CocycleWalker(const CircleLift& lift,
                             const DrivingSystem& driver, double x0,
                             DriverState omega0)
    : lift_(lift), driver_(driver) {
  traj_.x0 = x0;
  split_lift_value(x0, traj_.turns0, traj_.phase0);
  traj_.turns = traj_.turns0;
  traj_.phase = traj_.phase0;
  traj_.omega = std::move(omega0);
}

void CocycleWalker::advance(std::uint64_t steps) {
  const double rotation = kTwoPi * lift_.rho0;
  for (std::uint64_t i = 0; i < steps; ++i) {
    const double delta =
        rotation + lift_.displacement_at(traj_.phase, traj_.omega);
    // Kahan summation of the phase increments.
    const double y = delta - carry_;
    const double t = traj_.phase + y;
    carry_ = (t - traj_.phase) - y;
    traj_.phase = t;
    if (traj_.phase >= kTwoPi || traj_.phase < 0.0) {
      const double k = std::floor(traj_.phase / kTwoPi);
      traj_.phase -= k * kTwoPi;
      traj_.turns += static_cast<std::int64_t>(k);
      if (traj_.phase >= kTwoPi) {
        traj_.phase -= kTwoPi;
        ++traj_.turns;
      } else if (traj_.phase < 0.0) {
        traj_.phase += kTwoPi;
        --traj_.turns;
      }
    }
    traj_.omega = driver_.advance(traj_.omega);
    ++traj_.n;
  }
}

CocycleTrajectory iterate(const CircleLift& lift, const DrivingSystem& driver,
                          double x0, const DriverState& omega0,
                          std::uint64_t n) {
  CocycleWalker walker(lift, driver, x0, omega0);
  walker.advance(n);
  return walker.trajectory();
}

Spread displacement_spread(const CircleLift& lift, const DrivingSystem& driver,
                           const DriverState& omega, int grid,
                           std::uint64_t n) {
  if (grid < 16) {
    throw Error(ErrorKind::kConfiguration, "spread grid needs >= 16 points");
  }
  Spread s{-std::numeric_limits<double>::infinity(),
           std::numeric_limits<double>::infinity()};
  for (int j = 0; j < grid; ++j) {
    const double x = kTwoPi * j / grid;
    const double d = kTwoPi * iterate(lift, driver, x, omega, n).winding();
    s.sup = std::max(s.sup, d);
    s.inf = std::min(s.inf, d);
  }
  return s;
}

}  // namespace rotkam
