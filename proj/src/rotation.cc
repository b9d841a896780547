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

#include "rotkam/rotation.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "rotkam/errors.h"
#include "rotkam/parallel.h"

namespace rotkam {
namespace {

// 1, 2, 4, ... below n, then n itself.
std::vector<std::uint64_t> dyadic_checkpoints(std::uint64_t n) {
  std::vector<std::uint64_t> out;
  for (std::uint64_t c = 1; c < n; c *= 2) out.push_back(c);
  out.push_back(n);
  return out;
}

void require_iterations(std::uint64_t n) {
  if (n < 2) {
    throw Error(ErrorKind::kConfiguration,
                "rotation estimate needs n >= 2 iterations");
  }
}

double bump(double s) {
  if (s <= 0.0 || s >= 1.0) return 0.0;
  return std::exp(-1.0 / (s * (1.0 - s)));
}

}  // namespace

const char* to_string(Convention c) {
  return c == Convention::kMap ? "map" : "ode";
}

RotationEstimate estimate_map(const CircleLift& lift,
                              const DrivingSystem& driver, double x0,
                              const DriverState& omega0, std::uint64_t n) {
  require_iterations(n);
  RotationEstimate est;
  est.convention = Convention::kMap;
  est.horizon = static_cast<double>(n);
  CocycleWalker walker(lift, driver, x0, omega0);
  std::uint64_t done = 0;
  for (std::uint64_t c : dyadic_checkpoints(n)) {
    walker.advance(c - done);
    done = c;
    est.checkpoints.push_back(static_cast<double>(c));
    est.diagnostics.push_back(walker.trajectory().winding() /
                              static_cast<double>(c));
  }
  est.value = est.diagnostics.back();
  return est;
}

RotationEstimate deterministic_enclosure(const CircleLift& lift,
                                         std::uint64_t n) {
  if (lift.driver_dependent) {
    throw Error(ErrorKind::kUnsupported,
                "rigorous enclosures are only available for lifts that do "
                "not depend on the driver");
  }
  const auto driver = DrivingSystem::trivial();
  RotationEstimate est = estimate_map(lift, driver, 0.0, driver.initial_state(), n);
  const double half_width = 1.0 / static_cast<double>(n);
  est.enclosure = std::make_pair(est.value - half_width, est.value + half_width);
  return est;
}

double predicted_iid_rotation(std::span<const double> rhos,
                              std::span<const double> probs) {
  if (rhos.size() != probs.size() || rhos.empty()) {
    throw Error(ErrorKind::kValidation,
                "rotation numbers and probabilities differ in length");
  }
  for (double p : probs) {
    if (!(p > 0.0)) {
      throw Error(ErrorKind::kValidation, "probabilities must be positive");
    }
  }
  if (std::abs(std::accumulate(probs.begin(), probs.end(), 0.0) - 1.0) >
      1e-12) {
    throw Error(ErrorKind::kValidation, "probabilities must sum to 1");
  }
  return std::inner_product(rhos.begin(), rhos.end(), probs.begin(), 0.0);
}

RotationEstimate estimate_iid_composition(std::span<const CircleLift> maps,
                                          std::span<const double> probs,
                                          std::uint64_t seed, std::uint64_t n,
                                          int ensemble, unsigned jobs) {
  require_iterations(n);
  if (ensemble < 1) {
    throw Error(ErrorKind::kConfiguration, "ensemble size must be >= 1");
  }
  if (maps.size() != probs.size()) {
    throw Error(ErrorKind::kValidation,
                "number of maps and probabilities differ");
  }
  const auto base =
      DrivingSystem::bernoulli(std::vector<double>(probs.begin(), probs.end()), seed);
  const CircleLift composite =
      switched_lift(std::vector<CircleLift>(maps.begin(), maps.end()));

  std::vector<RotationEstimate> members(ensemble);
  parallel_for(static_cast<std::size_t>(ensemble), jobs, [&](std::size_t i) {
    const auto driver = base.with_seed(counter_hash(seed, i));
    members[i] = estimate_map(composite, driver, 0.0, driver.initial_state(), n);
  });

  RotationEstimate est = members.front();
  const double count = ensemble;
  for (std::size_t c = 0; c < est.diagnostics.size(); ++c) {
    double total = 0.0;
    for (const auto& m : members) total += m.diagnostics[c];
    est.diagnostics[c] = total / count;
  }
  est.value = est.diagnostics.back();
  if (ensemble > 1) {
    double ss = 0.0;
    for (const auto& m : members) ss += (m.value - est.value) * (m.value - est.value);
    est.std_dev = std::sqrt(ss / (count - 1.0));
  } else {
    est.std_dev = 0.0;
  }
  return est;
}

RotationEstimate estimate_ode(const OdeField& field, double x0, double T,
                              double dt, double t0) {
  if (!(dt > 0.0) || !(field.lipschitz_bound > 0.0) ||
      dt > 0.1 / field.lipschitz_bound * (1.0 + 1e-12)) {
    throw Error(ErrorKind::kConfiguration,
                "step size must satisfy 0 < dt <= 0.1 / Lipschitz bound");
  }
  if (!(T >= 10.0 * dt)) {
    throw Error(ErrorKind::kConfiguration, "horizon must satisfy T >= 10 dt");
  }
  const auto steps = static_cast<std::int64_t>(std::ceil(T / dt - 1e-9));
  const double h = T / static_cast<double>(steps);

  std::vector<double> horizons;
  for (double H = T; horizons.size() < 6 && (horizons.size() < 2 || H >= 10.0 * dt);
       H *= 0.5) {
    horizons.push_back(H);
  }
  std::reverse(horizons.begin(), horizons.end());
  std::vector<double> weighted(horizons.size(), 0.0);
  std::vector<double> weights(horizons.size(), 0.0);

  auto f = [&field](double x, double t) {
    const double v = field.f(x, t);
    if (!std::isfinite(v)) {
      throw Error(ErrorKind::kEvaluation,
                  "vector field is not finite at x = " + std::to_string(x));
    }
    return v;
  };

  double dx = 0.0;  // x - x0, Kahan-compensated
  double carry = 0.0;
  for (std::int64_t i = 0; i < steps; ++i) {
    const double t = t0 + h * static_cast<double>(i);
    const double x = x0 + dx;
    const double k1 = f(x, t);
    const double elapsed = h * static_cast<double>(i);
    for (std::size_t c = 0; c < horizons.size(); ++c) {
      if (elapsed >= horizons[c]) continue;
      const double w = bump(elapsed / horizons[c]);
      weighted[c] += w * k1;
      weights[c] += w;
    }
    const double k2 = f(x + 0.5 * h * k1, t + 0.5 * h);
    const double k3 = f(x + 0.5 * h * k2, t + 0.5 * h);
    const double k4 = f(x + h * k3, t + h);
    const double inc = h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4) - carry;
    const double next = dx + inc;
    carry = (next - dx) - inc;
    dx = next;
  }

  RotationEstimate est;
  est.convention = Convention::kOde;
  est.horizon = T;
  est.checkpoints = horizons;
  for (std::size_t c = 0; c < horizons.size(); ++c) {
    est.diagnostics.push_back(weights[c] > 0.0 ? weighted[c] / weights[c] : 0.0);
  }
  est.value = est.diagnostics.back();
  est.unweighted = dx / T;
  return est;
}

RotationEstimate estimate_planar_homogeneous(const PlanarSystem& system,
                                             const DrivingSystem& u_path,
                                             double alpha0, double T,
                                             double dt) {
  OdeField field;
  field.lipschitz_bound = system.lipschitz_bound;
  field.f = [&system, &u_path](double alpha, double t) {
    const std::array<double, 2> w{std::cos(alpha), std::sin(alpha)};
    const auto u = u_path.sample(t);
    const auto a = system.A(w, u);
    if (!std::isfinite(a[0]) || !std::isfinite(a[1])) {
      throw Error(ErrorKind::kEvaluation,
                  "planar field is not finite at t = " + std::to_string(t));
    }
    return -a[0] * w[1] + a[1] * w[0];
  };
  return estimate_ode(field, alpha0, T, dt);
}

ContinuityProbe continuity_probe(
    const std::function<CircleLift(double)>& family,
    const DrivingSystem& driver, double s0, double ds, std::uint64_t n,
    double x0, std::span<const double> omega0) {
  require_iterations(n);
  if (!(ds >= 0.0)) {
    throw Error(ErrorKind::kConfiguration, "continuity probe needs ds >= 0");
  }
  const CircleLift lo = family(s0);
  const CircleLift hi = family(s0 + ds);
  const DriverState omega = driver.initial_state(omega0);
  constexpr int kSamples = 256;
  for (int j = 0; j < kSamples; ++j) {
    const double x = kTwoPi * j / kSamples;
    if (lo(x, omega) > hi(x, omega) + 1e-12) {
      throw Error(ErrorKind::kValidation,
                  "family is not monotone in its parameter near x = " +
                      std::to_string(x));
    }
  }
  ContinuityProbe probe;
  probe.rho_at_s0 = estimate_map(lo, driver, x0, omega, n).value;
  probe.rho_at_s1 = ds == 0.0 ? probe.rho_at_s0
                              : estimate_map(hi, driver, x0, omega, n).value;
  probe.delta = probe.rho_at_s1 - probe.rho_at_s0;
  probe.monotone_consistent =
      probe.rho_at_s0 <= probe.rho_at_s1 + 2.0 / static_cast<double>(n);
  return probe;
}

}  // namespace rotkam
