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

#include "rotkam/kam.h"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "rotkam/errors.h"
#include "rotkam/rotation.h"

namespace rotkam {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

std::vector<double> grid_points(int dim, int n) {
  std::size_t count = 1;
  for (int j = 0; j < dim; ++j) count *= static_cast<std::size_t>(n);
  std::vector<double> pts(count * dim);
  for (std::size_t i = 0; i < count; ++i) {
    const auto x = grid_node(i, dim, n);
    std::copy(x.begin(), x.end(), pts.begin() + i * dim);
  }
  return pts;
}

// e^{2 pi i <mu,k>} - 1 = 2i sin(pi t) e^{i pi t} with t = <mu,k> mod 1.
Complex divisor(std::span<const double> mu, std::span<const int> k) {
  long double t = 0.0L;
  for (std::size_t j = 0; j < mu.size(); ++j) {
    t += static_cast<long double>(mu[j]) * k[j];
  }
  t -= std::nearbyint(t);
  const double a = static_cast<double>(std::numbers::pi_v<long double> * t);
  return Complex(0.0, 2.0 * std::sin(a)) * std::polar(1.0, a);
}

std::vector<int> canonical(std::vector<int> k) {
  for (int v : k) {
    if (v > 0) break;
    if (v < 0) {
      for (int& u : k) u = -u;
      break;
    }
  }
  return k;
}

// Zeroes coefficients at or below the round-off floor of the grid data they
// were computed from; otherwise e^{r|k|} weights amplify that noise in the
// majorant norm.
void chop(FourierSeries& f, double threshold) {
  for (int c = 0; c < f.value_dim(); ++c) {
    for (auto& v : f.coeffs(c)) {
      if (std::abs(v) <= threshold) v = 0.0;
    }
  }
}

// max_i sum_j ||d_j h_i||_0: bounds sup ||Dh|| in the row-sum norm.
double jacobian_majorant(const FourierSeries& h) {
  double worst = 0.0;
  for (int i = 0; i < h.value_dim(); ++i) {
    double row = 0.0;
    const FourierSeries hi = h.component(i);
    for (int j = 0; j < h.dim(); ++j) {
      row += majorant_norm(derivative(hi, j), 0.0).value;
    }
    worst = std::max(worst, row);
  }
  return worst;
}

double max_abs_mean(const FourierSeries& f) {
  double m = 0.0;
  for (int c = 0; c < f.value_dim(); ++c) m = std::max(m, std::abs(mean(f, c)));
  return m;
}

void check_torus_map(const TorusMap& map) {
  const int m = map.dim();
  if (m < 1 || map.p.dim() != m || map.p.value_dim() != m) {
    throw Error(ErrorKind::kConfiguration,
                "torus map perturbation must be a vector series on T^m with "
                "m = len(mu)");
  }
}

// p^n on the torus grid, from Phi_n = H^{-1} o (Phi + lambda e_axis) o H with
// H = id + h:
//   p^n(z) = h(z) + p(y) + lambda e_axis + g(w),
//   y = z + h(z), w = y + 2 pi mu + p(y) + lambda e_axis,
// where g is the inverse displacement of H.
FourierSeries conjugated_perturbation(const TorusMap& original,
                                      double translation, int axis,
                                      const FourierSeries& h, int order,
                                      int oversample, double tol) {
  const int m = original.dim();
  const int n = grid_size_for(std::max(order, original.p.order()), oversample);
  const auto z = grid_points(m, n);
  const std::size_t count = z.size() / m;

  std::vector<double> hz(count * m), y(count * m), py(count * m),
      w(count * m);
  for (int j = 0; j < m; ++j) {
    const auto col = to_real_grid(h, n, j);
    for (std::size_t i = 0; i < count; ++i) {
      hz[i * m + j] = col[i];
      y[i * m + j] = z[i * m + j] + col[i];
    }
  }
  for (int j = 0; j < m; ++j) {
    const auto col = evaluate_points_real(original.p, y, j);
    for (std::size_t i = 0; i < count; ++i) py[i * m + j] = col[i];
  }
  for (std::size_t i = 0; i < count; ++i) {
    for (int j = 0; j < m; ++j) {
      w[i * m + j] = y[i * m + j] + kTwoPi * original.mu[j] + py[i * m + j] +
                     (j == axis ? translation : 0.0);
    }
  }
  const auto g = inverse_displacement_at(h, w, tol);

  double scale = 0.0;
  std::vector<FourierSeries> parts;
  for (int j = 0; j < m; ++j) {
    std::vector<double> vals(count);
    for (std::size_t i = 0; i < count; ++i) {
      const double lam = j == axis ? translation : 0.0;
      vals[i] = hz[i * m + j] + py[i * m + j] + lam + g[i * m + j];
      scale = std::max({scale, std::abs(hz[i * m + j]), std::abs(py[i * m + j]),
                        std::abs(lam), std::abs(g[i * m + j])});
    }
    parts.push_back(from_grid(std::span<const double>(vals), m, order));
  }
  FourierSeries out = FourierSeries::stack(parts);
  chop(out, 32.0 * kEps * scale);
  return out;
}

void settle_translation(KamState& state, const KamConfig& config) {
  if (!config.adjust_translation) return;
  for (int it = 0; it < 6; ++it) {
    const double drift = mean(state.map.p, config.translation_axis).real();
    if (std::abs(drift) <= 4.0 * kEps * std::max(1.0, std::abs(state.translation))) {
      break;
    }
    state.translation -= drift;
    state.map.p = conjugated_perturbation(
        state.original, state.translation, config.translation_axis,
        state.h_accum, state.map.p.order(), config.oversample,
        config.inversion_tol);
  }
}

StageRecord describe(const KamState& state) {
  StageRecord rec;
  rec.stage = state.stage;
  rec.r = state.r;
  rec.delta = state.delta;
  rec.order = state.map.p.order();
  rec.residual = majorant_norm(state.map.p, state.r).value;
  rec.mean_abs = max_abs_mean(state.map.p);
  rec.translation = state.translation;
  return rec;
}

int effective_order(const KamConfig& config, const TorusMap& map, int stage) {
  return std::max(config.order_at(stage), map.p.order());
}

int default_defect_grid(const KamConfig& config, const TorusMap& map) {
  const int top = grid_size_for(std::max(config.max_order, map.p.order()),
                                config.oversample);
  return map.dim() == 1 ? 4 * top : 2 * top + 1;
}

}  // namespace

void KamConfig::validate() const {
  if (!(delta0 > 0.0 && delta0 <= 0.5)) {
    throw Error(ErrorKind::kConfiguration, "kam: delta0 must lie in (0, 1/2]");
  }
  if (!(r0 > 0.0)) {
    throw Error(ErrorKind::kConfiguration, "kam: r0 must be positive");
  }
  double total = 0.0;
  for (double d = delta0; d > 1e-300; d = std::pow(d, 1.5)) total += d;
  if (!(total < 0.5 * r0)) {
    throw Error(ErrorKind::kConfiguration,
                "kam: strip losses sum to " + std::to_string(total) +
                    ", need < r0/2 = " + std::to_string(0.5 * r0));
  }
  if (max_stages < 1 || base_order < 1 || max_order < 1 || oversample < 2) {
    throw Error(ErrorKind::kConfiguration,
                "kam: stages, orders must be >= 1 and oversample >= 2");
  }
  if (!(defect_target > 0.0) || !(inversion_tol > 0.0) || !(smallness > 0.0)) {
    throw Error(ErrorKind::kConfiguration,
                "kam: tolerances and thresholds must be positive");
  }
}

double KamConfig::delta_at(int stage) const {
  double d = delta0;
  for (int i = 0; i < stage; ++i) d = std::pow(d, 1.5);
  return d;
}

int KamConfig::order_at(int stage) const {
  const double d = delta_at(stage);
  const double grow = std::ceil(1.0 / std::sqrt(d));
  const double k = base_order * grow;
  return static_cast<int>(std::min<double>(max_order, k));
}

KamConfig default_kam_config(const TorusMap& map) {
  KamConfig config;
  const int m = map.dim();
  config.r0 = 0.5;
  try {
    const auto fit = decay_fit(remove_mean(map.p));
    if (std::isfinite(fit.r) && fit.r > 0.0) config.r0 = std::min(0.5, fit.r);
  } catch (const Error&) {
    // Fewer than two shells: nothing to fit, keep the cap.
  }
  while (true) {
    try {
      config.validate();
      break;
    } catch (const Error&) {
      config.delta0 *= 0.5;
      if (config.delta0 < 1e-6) throw;
    }
  }
  config.smallness = m == 1 ? 1e-2 : 1e-3;
  if (m == 1) {
    config.base_order = 4;
    config.max_order = 32;
  } else if (m == 2) {
    config.base_order = 2;
    config.max_order = 16;
  } else {
    config.base_order = 2;
    config.max_order = 8;
  }
  config.max_order = std::max(config.max_order, map.p.order());
  return config;
}

const char* to_string(KamStatus s) {
  switch (s) {
    case KamStatus::kConverged: return "converged";
    case KamStatus::kDiverged: return "diverged";
    case KamStatus::kResonant: return "resonant";
  }
  return "unknown";
}

FourierSeries solve_homological(const FourierSeries& p,
                                std::span<const double> mu) {
  if (static_cast<int>(mu.size()) != p.dim()) {
    throw Error(ErrorKind::kConfiguration,
                "rotation vector length differs from torus dimension");
  }
  const double scale = std::max(1.0, majorant_norm(p, 0.0).value);
  for (int c = 0; c < p.value_dim(); ++c) {
    if (std::abs(mean(p, c)) > 1e-14 * scale) {
      throw Error(ErrorKind::kUnsolvable,
                  "homological equation is not solvable: component " +
                      std::to_string(c) + " has nonzero mean");
    }
  }
  FourierSeries h(p.dim(), p.order(), p.value_dim());
  const std::size_t center = p.mode_count() / 2;
  for (std::size_t i = 0; i < p.mode_count(); ++i) {
    if (i == center) continue;
    bool active = false;
    for (int c = 0; c < p.value_dim(); ++c) {
      active = active || p.coeffs(c)[i] != Complex(0.0);
    }
    if (!active) continue;
    const auto k = p.mode(i);
    const Complex d = divisor(mu, k);
    if (std::abs(d) < 1e-14) {
      const auto named = canonical(k);
      throw ResonanceError(named, "resonance: small divisor vanishes at k = " +
                                      format_mode(named));
    }
    for (int c = 0; c < p.value_dim(); ++c) h.coeffs(c)[i] = p.coeffs(c)[i] / d;
  }
  return h;
}

double homological_residual(const FourierSeries& h, const FourierSeries& p,
                            std::span<const double> mu) {
  std::vector<double> shift(mu.size());
  for (std::size_t j = 0; j < mu.size(); ++j) shift[j] = kTwoPi * mu[j];
  FourierSeries lhs = compose_displacement(h, nullptr, shift) - h;
  lhs -= p;
  const int n = grid_size_for(p.order(), 2);
  double worst = 0.0;
  for (int c = 0; c < lhs.value_dim(); ++c) {
    for (const auto& v : to_grid(lhs, n, c)) worst = std::max(worst, std::abs(v));
  }
  return worst;
}

SmallDivisorReport small_divisor_bound_check(
    const FourierSeries& p, const FourierSeries& h, std::span<const double> mu,
    double r, double delta, const DiophantineCertificate& certificate) {
  const int m = p.dim();
  if (certificate.resonant()) {
    throw ResonanceError(certificate.worst_k,
                         "certificate records an exact resonance at k = " +
                             format_mode(certificate.worst_k));
  }
  if (certificate.K_checked < m * p.order() ||
      certificate.mu.size() != mu.size()) {
    throw Error(ErrorKind::kConfiguration,
                "certificate does not cover the retained modes");
  }
  if (!(delta > 0.0 && delta < r)) {
    throw Error(ErrorKind::kConfiguration, "need 0 < delta < r");
  }
  const double nu = certificate.nu;
  const double cross = m == 1 ? 1.0 : std::pow((4.0 * m - 4.0) / std::numbers::e, m - 1);
  SmallDivisorReport report;
  report.constant = 8.0 / certificate.C_best * std::pow(nu / std::numbers::e, nu) *
                    std::pow(2.0, nu + m) * cross;
  // Smallest integer lambda with constant * delta^{-nu-m} <= delta^{-lambda}.
  const double needed = nu + m + std::log(report.constant) / std::log(1.0 / delta);
  report.lambda = std::max(0, static_cast<int>(std::ceil(needed - 1e-12)));
  report.lhs = majorant_norm(h, r - delta).value;
  report.rhs = majorant_norm(p, r).value * std::pow(delta, -report.lambda);
  report.holds = report.lhs <= report.rhs;
  return report;
}

std::vector<double> inverse_displacement_at(const FourierSeries& h,
                                            std::span<const double> targets,
                                            double tol, int max_sweeps) {
  const int m = h.dim();
  const std::size_t count = targets.size() / m;
  std::vector<double> d(targets.size(), 0.0);
  if (h.is_zero()) return d;
  std::vector<double> pts(targets.size());
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    for (std::size_t i = 0; i < targets.size(); ++i) pts[i] = targets[i] + d[i];
    double change = 0.0;
    for (int j = 0; j < m; ++j) {
      const auto hj = evaluate_points_real(h, pts, j);
      for (std::size_t i = 0; i < count; ++i) {
        const double next = -hj[i];
        change = std::max(change, std::abs(next - d[i * m + j]));
        d[i * m + j] = next;
      }
    }
    if (change <= tol) return d;
  }
  throw Error(ErrorKind::kInversion,
              "near-identity inversion did not converge in " +
                  std::to_string(max_sweeps) + " sweeps");
}

FourierSeries invert_near_identity(const FourierSeries& h, int order,
                                   double tol, int oversample) {
  const int m = h.dim();
  if (h.value_dim() != m) {
    throw Error(ErrorKind::kConfiguration,
                "near-identity map needs a vector displacement");
  }
  if (order <= 0) order = h.order();
  const int n = grid_size_for(std::max(order, h.order()), oversample);
  const auto x = grid_points(m, n);
  const std::size_t count = x.size() / m;

  // sup over the grid of the row-sum norm of Dh.
  std::vector<std::vector<double>> jac;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      jac.push_back(to_real_grid(derivative(h.component(i), j), n));
    }
  }
  double sup_dh = 0.0;
  for (std::size_t p = 0; p < count; ++p) {
    for (int i = 0; i < m; ++i) {
      double row = 0.0;
      for (int j = 0; j < m; ++j) row += std::abs(jac[i * m + j][p]);
      sup_dh = std::max(sup_dh, row);
    }
  }
  if (!(sup_dh < 0.5)) {
    throw Error(ErrorKind::kInversion,
                "near-identity inversion needs sup ||Dh|| < 0.5, got " +
                    sci(sup_dh));
  }

  const auto g_nodes = inverse_displacement_at(h, x, tol);
  std::vector<FourierSeries> parts;
  for (int j = 0; j < m; ++j) {
    std::vector<double> vals(count);
    for (std::size_t p = 0; p < count; ++p) vals[p] = g_nodes[p * m + j];
    parts.push_back(from_grid(std::span<const double>(vals), m, order));
  }
  FourierSeries g = FourierSeries::stack(parts);

  // (id + h) o (id + g) - id = g + h(id + g), checked on the same grid.
  std::vector<std::vector<double>> g_grid;
  std::vector<double> pts(x.size());
  for (int j = 0; j < m; ++j) g_grid.push_back(to_real_grid(g, n, j));
  for (std::size_t p = 0; p < count; ++p) {
    for (int j = 0; j < m; ++j) pts[p * m + j] = x[p * m + j] + g_grid[j][p];
  }
  double defect = 0.0;
  for (int j = 0; j < m; ++j) {
    const auto hj = evaluate_points_real(h, pts, j);
    for (std::size_t p = 0; p < count; ++p) {
      defect = std::max(defect, std::abs(g_grid[j][p] + hj[p]));
    }
  }
  if (defect > 10.0 * tol + 64.0 * kEps * majorant_norm(h, 0.0).value) {
    throw Error(ErrorKind::kInversion,
                "inverse truncated at order " + std::to_string(order) +
                    " leaves composition defect " + sci(defect));
  }
  return g;
}

KamState initial_kam_state(const TorusMap& map, const KamConfig& config) {
  check_torus_map(map);
  const int m = map.dim();
  KamState state;
  state.stage = 0;
  state.original = map;
  state.r = config.r0;
  state.delta = config.delta0;
  const int order = effective_order(config, map, 0);
  state.h_accum = FourierSeries(m, order, m);
  state.map.mu = map.mu;
  state.map.p = map.p.resized(order);
  settle_translation(state, config);
  state.history.push_back(describe(state));
  return state;
}

KamState kam_step(const KamState& state,
                  const DiophantineCertificate& certificate,
                  const KamConfig& config) {
  (void)certificate;
  const auto& mu = state.map.mu;
  const FourierSeries p_tilde = remove_mean(state.map.p);
  const FourierSeries h = solve_homological(p_tilde, mu);
  const double p_scale = std::max(majorant_norm(p_tilde, 0.0).value, 1e-300);
  const double hom_res = homological_residual(h, p_tilde, mu) / p_scale;

  const double dh = jacobian_majorant(h);
  if (!(dh < 0.5)) {
    throw Error(ErrorKind::kInversion,
                "stage " + std::to_string(state.stage) +
                    ": conjugacy step too large, ||Dh|| bound " +
                    sci(dh));
  }

  KamState next;
  next.stage = state.stage + 1;
  next.original = state.original;
  next.translation = state.translation;
  next.r = state.r - state.delta;
  next.delta = std::pow(state.delta, 1.5);
  next.history = state.history;
  next.map.mu = mu;

  const int order = std::max(effective_order(config, state.original, next.stage),
                             state.map.p.order());
  // H_{n+1} = H_n o H^n:  h_acc'(z) = h(z) + h_acc(z + h(z)).
  const FourierSeries step_h = h.resized(order);
  const FourierSeries acc = state.h_accum.resized(order);
  const std::vector<double> no_shift(mu.size(), 0.0);
  next.h_accum = step_h + compose_displacement(acc, &step_h, no_shift,
                                               config.oversample);
  chop(next.h_accum, 32.0 * kEps * majorant_norm(next.h_accum, 0.0).value);

  next.map.p = conjugated_perturbation(next.original, next.translation,
                                       config.translation_axis, next.h_accum,
                                       order, config.oversample,
                                       config.inversion_tol);
  settle_translation(next, config);

  StageRecord rec = describe(next);
  rec.dh_norm = dh;
  rec.homological_residual = hom_res;
  const double prev = state.history.back().residual;
  if (prev > 0.0 && rec.residual > 0.0) {
    rec.gamma_eff = std::log(rec.residual / (prev * prev)) /
                    std::log(1.0 / state.delta);
  }
  next.history.push_back(rec);
  if (rec.residual > 2.0 * prev) {
    std::vector<double> trace;
    for (const auto& r : next.history) trace.push_back(r.residual);
    throw DivergenceError(next.stage, trace,
                          "stage " + std::to_string(next.stage) +
                              ": residual grew from " + sci(prev) + " to " +
                              sci(rec.residual));
  }
  return next;
}

double conjugacy_defect(const FourierSeries& h, const TorusMap& map,
                        int grid_size, double translation,
                        int translation_axis) {
  check_torus_map(map);
  const int m = map.dim();
  if (h.dim() != m || h.value_dim() != m) {
    throw Error(ErrorKind::kConfiguration, "conjugacy has the wrong shape");
  }
  const auto z = grid_points(m, grid_size);
  const std::size_t count = z.size() / m;
  std::vector<double> shifted(z.size()), hz_pts(z.size());
  std::vector<std::vector<double>> hz(m);
  for (int j = 0; j < m; ++j) hz[j] = evaluate_points_real(h, z, j);
  for (std::size_t i = 0; i < count; ++i) {
    for (int j = 0; j < m; ++j) {
      shifted[i * m + j] = z[i * m + j] + kTwoPi * map.mu[j];
      hz_pts[i * m + j] = z[i * m + j] + hz[j][i];
    }
  }
  double worst = 0.0;
  for (int j = 0; j < m; ++j) {
    const auto h_shift = evaluate_points_real(h, shifted, j);
    const auto p_at_h = evaluate_points_real(map.p, hz_pts, j);
    const double lam = j == translation_axis ? translation : 0.0;
    for (std::size_t i = 0; i < count; ++i) {
      // H(z + 2 pi mu) - Phi(H(z)) with the common z + 2 pi mu cancelled.
      const double diff = h_shift[i] - hz[j][i] - p_at_h[i] - lam;
      worst = std::max(worst, std::abs(std::remainder(diff, kTwoPi)));
    }
  }
  return worst;
}

ConjugacyResult run_kam(const TorusMap& map, const KamConfig& config,
                        const DiophantineCertificate& certificate) {
  config.validate();
  check_torus_map(map);
  const int m = map.dim();
  if (certificate.mu.size() != map.mu.size()) {
    throw Error(ErrorKind::kConfiguration,
                "certificate was issued for a different rotation vector size");
  }
  if (certificate.resonant()) {
    throw ResonanceError(certificate.worst_k,
                         "resonant rotation vector: divisor vanishes at k = " +
                             format_mode(certificate.worst_k));
  }
  const int top_order = std::max(config.max_order, map.p.order());
  if (certificate.K_checked < m * top_order) {
    throw Error(ErrorKind::kConfiguration,
                "certificate checked to |k| <= " +
                    std::to_string(certificate.K_checked) +
                    " but the iteration retains |k| up to " +
                    std::to_string(m * top_order));
  }
  const double initial = majorant_norm(map.p, config.r0).value;
  if (initial > config.smallness) {
    throw DivergenceError(0, {initial},
                          "perturbation norm " + sci(initial) +
                              " exceeds the smallness threshold " +
                              sci(config.smallness));
  }

  ConjugacyResult result;
  result.certificate = certificate;
  result.defect_grid =
      config.defect_grid > 0 ? config.defect_grid : default_defect_grid(config, map);

  KamState state = initial_kam_state(map, config);
  auto record = [&](const KamState& s) {
    if (config.record_stage_maps) result.stage_perturbations.push_back(s.map.p);
  };
  record(state);
  double defect = conjugacy_defect(state.h_accum, map, result.defect_grid,
                                   state.translation, config.translation_axis);
  result.defects.push_back(defect);
  while (defect > config.defect_target) {
    if (state.stage >= config.max_stages) {
      std::vector<double> trace;
      for (const auto& r : state.history) trace.push_back(r.residual);
      throw DivergenceError(state.stage, trace,
                            "defect " + sci(defect) +
                                " above target after " +
                                std::to_string(state.stage) + " stages");
    }
    const double before = state.history.back().residual;
    state = kam_step(state, certificate, config);
    record(state);
    const StageRecord& last = state.history.back();
    // A residual that stops shrinking while carried by the mean means the
    // map does not have rotation vector mu; more stages cannot help.
    if (last.residual > 0.5 * before && last.mean_abs >= 0.5 * last.residual &&
        !config.adjust_translation) {
      std::vector<double> trace;
      for (const auto& r : state.history) trace.push_back(r.residual);
      throw DivergenceError(
          state.stage, trace,
          "stage " + std::to_string(state.stage) + ": residual stalled at " +
              sci(last.residual) + ", carried by a mean drift of " +
              sci(last.mean_abs) + "; rotation vector is not matched");
    }
    defect = conjugacy_defect(state.h_accum, map, result.defect_grid,
                              state.translation, config.translation_axis);
    result.defects.push_back(defect);
  }

  result.status = KamStatus::kConverged;
  result.h = state.h_accum;
  result.defect = defect;
  result.stages_used = state.stage;
  result.translation = state.translation;
  result.history = state.history;
  return result;
}

CircleLift TranslationFamily::at(double c) const {
  CircleLift lift;
  lift.rho0 = c / kTwoPi;
  if (eps != 0.0) {
    lift.displacement = [e = eps, f = q](double x, const DriverState&) {
      return e * f(x);
    };
  }
  return lift;
}

TorusMap TranslationFamily::torus_map_at(double c, double target_rho) const {
  if (!q_series) {
    throw Error(ErrorKind::kConfiguration,
                "family needs a Fourier form of q to build a torus map");
  }
  FourierSeries p = Complex(eps) * *q_series;
  p.at({0}) += c - kTwoPi * target_rho;
  return TorusMap{{target_rho}, p};
}

TranslationFamily sine_family(double eps) {
  TranslationFamily fam;
  fam.eps = eps;
  fam.q = [](double x) { return std::sin(x); };
  FourierSeries q(1, 1);
  q.at({1}) = Complex(0.0, -0.5);
  q.at({-1}) = Complex(0.0, 0.5);
  fam.q_series = q;
  return fam;
}

double match_rotation_parameter(const TranslationFamily& family,
                                double target_rho, double tol) {
  if (family.eps == 0.0) return kTwoPi * target_rho;
  if (!(tol > 0.0)) {
    throw Error(ErrorKind::kConfiguration, "matching tolerance must be > 0");
  }
  validate_lift(family.at(0.0), DriverState{});
  const auto n = static_cast<std::uint64_t>(std::floor(2.0 / tol)) + 1;
  auto bracket = [&](double c) {
    return *deterministic_enclosure(family.at(c), n).enclosure;
  };
  double lo = kTwoPi * target_rho - kTwoPi;
  double hi = kTwoPi * target_rho + kTwoPi;
  const auto e_lo = bracket(lo);
  const auto e_hi = bracket(hi);
  if (e_lo.first > target_rho || e_hi.second < target_rho) {
    throw Error(ErrorKind::kValidation,
                "no parameter in [2 pi rho - 2 pi, 2 pi rho + 2 pi] attains "
                "the target rotation number");
  }
  if (e_lo.second >= target_rho) return lo;
  if (e_hi.first <= target_rho) return hi;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const auto e = bracket(mid);
    if (e.first <= target_rho && target_rho <= e.second) return mid;
    if (e.second < target_rho) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 4.0 * kEps * std::abs(mid)) return mid;
  }
  return 0.5 * (lo + hi);
}

ConjugacyResult conjugate_skew_product(const CircleLift& phi,
                                       std::span<const double> alpha,
                                       double rho, const KamConfig& config,
                                       double nu) {
  const int m = 1 + static_cast<int>(alpha.size());
  std::vector<double> mu{rho};
  mu.insert(mu.end(), alpha.begin(), alpha.end());
  if (nu <= 0.0) nu = m;

  FourierSeries fiber(m, 1);
  if (phi.fourier) {
    if (phi.fourier->dim() != m || phi.fourier->value_dim() != 1) {
      throw Error(ErrorKind::kConfiguration,
                  "fiber displacement must be a scalar series on T^" +
                      std::to_string(m));
    }
    fiber = *phi.fourier;
  } else if (phi.displacement) {
    throw Error(ErrorKind::kConfiguration,
                "skew-product conjugation needs the displacement as a series");
  }
  fiber.at(std::vector<int>(m, 0)) += kTwoPi * (phi.rho0 - rho);

  std::vector<FourierSeries> comps{fiber};
  for (int j = 1; j < m; ++j) comps.emplace_back(m, fiber.order());
  const TorusMap map{mu, FourierSeries::stack(comps)};

  const int top = std::max(config.max_order, fiber.order());
  const int K = std::max(default_certificate_order(m), m * top);
  const auto certificate = certify(mu, nu, K);
  if (certificate.resonant()) {
    throw ResonanceError(certificate.worst_k,
                         "resonant frequency vector (rho, alpha): divisor "
                         "vanishes at k = " +
                             format_mode(certificate.worst_k));
  }
  KamConfig cfg = config;
  cfg.translation_axis = 0;
  ConjugacyResult result = run_kam(map, cfg, certificate);
  result.fiber = result.h.component(0);
  return result;
}

}  // namespace rotkam
