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

#ifndef ROTKAM_ROTATION_H_
#define ROTKAM_ROTATION_H_

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "rotkam/dynamics.h"

namespace rotkam {

// Map convention: lim phi(n, omega) x / (2 pi n), turns per step.
// ODE convention: lim (x(T) - x0) / T, radians per unit time.
enum class Convention { kMap, kOde };

const char* to_string(Convention c);

struct RotationEstimate {
  double value = 0.0;
  double horizon = 0.0;  // iterations n or time T
  std::optional<std::pair<double, double>> enclosure;
  Convention convention = Convention::kMap;
  // Partial estimates at dyadic checkpoints; the last entry equals value.
  std::vector<double> checkpoints;
  std::vector<double> diagnostics;
  std::optional<double> std_dev;     // ensemble estimates only
  std::optional<double> unweighted;  // ODE estimates: (x(T) - x0) / T
};

// xdot = f(x, t), 2pi-periodic in x with Lipschitz constant bounded by
// lipschitz_bound. Time dependence carries the driving path.
struct OdeField {
  std::function<double(double, double)> f;
  double lipschitz_bound = 1.0;
};

RotationEstimate estimate_map(const CircleLift& lift,
                              const DrivingSystem& driver, double x0,
                              const DriverState& omega0, std::uint64_t n);

// Bracket [(F^n(0) - 2pi) / (2pi n), (F^n(0) + 2pi) / (2pi n)] of width 2/n
// for a lift that does not depend on the driver.
RotationEstimate deterministic_enclosure(const CircleLift& lift,
                                         std::uint64_t n);

double predicted_iid_rotation(std::span<const double> rhos,
                              std::span<const double> probs);

// Mean and sample standard deviation of estimate_map over `ensemble`
// independent symbol streams. The maps are expected to share an invariant
// measure; this is not checked.
RotationEstimate estimate_iid_composition(std::span<const CircleLift> maps,
                                          std::span<const double> probs,
                                          std::uint64_t seed, std::uint64_t n,
                                          int ensemble, unsigned jobs = 1);

// Integrates the lift with classical RK4 at fixed step and returns the
// smooth-window weighted time average of f along the orbit, which converges
// to (x(T) - x0) / T's limit far faster than the raw quotient. The raw
// quotient is reported in `unweighted`.
RotationEstimate estimate_ode(const OdeField& field, double x0, double T,
                              double dt, double t0 = 0.0);

// xdot = A(x, u(t)) on R^2, positively homogeneous of degree one in x. The
// angle obeys alphadot = <A(w, u), v> with w = (cos a, sin a),
// v = (-sin a, cos a).
struct PlanarSystem {
  std::function<std::array<double, 2>(std::array<double, 2>,
                                      std::span<const double>)>
      A;
  double lipschitz_bound = 1.0;
};

RotationEstimate estimate_planar_homogeneous(const PlanarSystem& system,
                                             const DrivingSystem& u_path,
                                             double alpha0, double T,
                                             double dt);

struct ContinuityProbe {
  double rho_at_s0 = 0.0;
  double rho_at_s1 = 0.0;
  double delta = 0.0;
  bool monotone_consistent = true;  // rho(s0) <= rho(s0 + ds) + 2/n
};

ContinuityProbe continuity_probe(
    const std::function<CircleLift(double)>& family,
    const DrivingSystem& driver, double s0, double ds, std::uint64_t n,
    double x0 = 0.0, std::span<const double> omega0 = {});

}  // namespace rotkam

#endif  // ROTKAM_ROTATION_H_
