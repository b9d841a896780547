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

#ifndef ROTKAM_KAM_H_
#define ROTKAM_KAM_H_

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rotkam/diophantine.h"
#include "rotkam/dynamics.h"
#include "rotkam/fourier.h"

namespace rotkam {

// z -> z + 2 pi mu + p(z) on R^m / 2piZ^m; p has value_dim == m.
struct TorusMap {
  std::vector<double> mu;
  FourierSeries p{1, 1, 1};

  int dim() const { return static_cast<int>(mu.size()); }
};

struct KamConfig {
  double r0 = 0.5;       // initial strip radius
  double delta0 = 0.1;   // initial strip loss; delta_n = delta_{n-1}^{3/2}
  int max_stages = 8;
  int base_order = 4;    // K_n = base_order * ceil(delta_n^{-1/2}), capped
  int max_order = 64;
  int oversample = 4;
  double defect_target = 1e-10;
  double inversion_tol = 1e-14;
  // Largest accepted initial majorant norm ||p||_{r0}.
  double smallness = 1e-2;
  // Absorb the mean of the component `translation_axis` into a translation
  // of the original map (Phi + lambda e_axis) at every stage. This matches
  // the rotation number that the conjugacy requires.
  bool adjust_translation = false;
  int translation_axis = 0;
  // Points per axis of the defect grid; 0 picks a grid finer than and
  // disjoint from every stage grid.
  int defect_grid = 0;
  bool record_stage_maps = false;

  // Throws a configuration error unless delta0 <= 1/2 and
  // sum_n delta0^{(3/2)^n} < r0 / 2.
  void validate() const;
  int order_at(int stage) const;
  double delta_at(int stage) const;
};

// r0 = min(0.5, fitted decay rate of p) (0.5 when no fit is possible),
// smallness 1e-2 for m = 1 and 1e-3 otherwise, orders sized for m.
KamConfig default_kam_config(const TorusMap& map);

struct StageRecord {
  int stage = 0;
  double r = 0.0;
  double delta = 0.0;
  int order = 0;
  double residual = 0.0;   // ||p^n||_{r_n}
  double mean_abs = 0.0;   // max_j |mean(p^n_j)|
  double translation = 0.0;
  double gamma_eff = 0.0;  // log(res_n / res_{n-1}^2) / log(1 / delta_{n-1})
  double dh_norm = 0.0;    // majorant bound on ||Dh^{n-1}||
  double homological_residual = 0.0;  // relative, stage n-1 solve
};

struct KamState {
  int stage = 0;
  TorusMap original;
  TorusMap map;  // current Phi_n = H_n^{-1} o (Phi + lambda) o H_n
  double r = 0.0;
  double delta = 0.0;
  double translation = 0.0;
  FourierSeries h_accum{1, 1, 1};  // H_n = id + h_accum
  std::vector<StageRecord> history;
};

enum class KamStatus { kConverged, kDiverged, kResonant };
const char* to_string(KamStatus s);

struct ConjugacyResult {
  KamStatus status = KamStatus::kConverged;
  FourierSeries h{1, 1, 1};
  double defect = 0.0;
  int defect_grid = 0;
  int stages_used = 0;
  double translation = 0.0;
  std::vector<StageRecord> history;
  std::vector<double> defects;  // after each stage
  DiophantineCertificate certificate;
  std::vector<FourierSeries> stage_perturbations;  // p^0, p^1, ... if recorded
  std::optional<FourierSeries> fiber;  // skew products: fiber component of h
};

// h_k = p_k / (e^{2 pi i <mu,k>} - 1), h_0 = 0. Throws an unsolvable error
// when the mean of p is not zero and a resonance error naming k when a
// divisor of a nonzero coefficient is below 1e-14.
FourierSeries solve_homological(const FourierSeries& p,
                                std::span<const double> mu);

// Max over the 4K grid of |h(z + 2 pi mu) - h(z) - p(z)|.
double homological_residual(const FourierSeries& h, const FourierSeries& p,
                            std::span<const double> mu);

struct SmallDivisorReport {
  bool holds = false;
  double lhs = 0.0;       // ||h||_{r - delta}
  double rhs = 0.0;       // ||p||_r delta^{-lambda}
  int lambda = 0;
  double constant = 0.0;  // 8 C^{-1} (nu/e)^nu 2^{nu+m} ((4m-4)/e)^{m-1}
};

// Checks ||h||_{r-delta} <= ||p||_r delta^{-lambda}, with lambda the
// smallest integer for which the small-divisor estimate chain closes at this
// delta given the certified (C, nu).
SmallDivisorReport small_divisor_bound_check(
    const FourierSeries& p, const FourierSeries& h, std::span<const double> mu,
    double r, double delta, const DiophantineCertificate& certificate);

// For every target w (row-major, dim coordinates each) returns d with
// (w + d) + h(w + d) = w, i.e. the inverse displacement g(w), by fixed-point
// iteration d <- -h(w + d). Working with d keeps the result free of the
// cancellation in y - w.
std::vector<double> inverse_displacement_at(const FourierSeries& h,
                                            std::span<const double> targets,
                                            double tol, int max_sweeps = 100);

// g with (id + h) o (id + g) = id, as a series of the given order (defaults
// to the order of h). Requires sup_grid ||Dh|| < 0.5.
FourierSeries invert_near_identity(const FourierSeries& h, int order = 0,
                                   double tol = 1e-14, int oversample = 4);

KamState initial_kam_state(const TorusMap& map, const KamConfig& config);

KamState kam_step(const KamState& state,
                  const DiophantineCertificate& certificate,
                  const KamConfig& config);

ConjugacyResult run_kam(const TorusMap& map, const KamConfig& config,
                        const DiophantineCertificate& certificate);

// Max over a regular grid of the componentwise angular distance between
// H(z + 2 pi mu) and (Phi + translation e_axis)(H(z)), H = id + h.
double conjugacy_defect(const FourierSeries& h, const TorusMap& map,
                        int grid_size, double translation = 0.0,
                        int translation_axis = 0);

// c -> lift x + c + eps q(x).
struct TranslationFamily {
  double eps = 0.0;
  std::function<double(double)> q;
  std::optional<FourierSeries> q_series;  // needed for torus_map_at

  CircleLift at(double c) const;
  TorusMap torus_map_at(double c, double target_rho) const;
};

TranslationFamily sine_family(double eps);

// Bisection on c using deterministic enclosures of width < tol until the
// enclosure of rho(c) contains target_rho.
double match_rotation_parameter(const TranslationFamily& family,
                                double target_rho, double tol);

// Embeds phi(x, omega) = x + 2 pi rho0 + p(x, omega) over omega -> omega +
// 2 pi alpha as the torus map (x, omega) -> (phi, omega + 2 pi alpha) with
// mu = (rho, alpha) and conjugates it. The certificate is computed here.
ConjugacyResult conjugate_skew_product(const CircleLift& phi,
                                       std::span<const double> alpha,
                                       double rho, const KamConfig& config,
                                       double nu = 0.0);

}  // namespace rotkam

#endif  // ROTKAM_KAM_H_
