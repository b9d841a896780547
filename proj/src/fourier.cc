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

#include "rotkam/fourier.h"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>

#include "rotkam/errors.h"

namespace rotkam {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::size_t ipow(std::size_t base, int exp) {
  std::size_t out = 1;
  for (int i = 0; i < exp; ++i) out *= base;
  return out;
}

// FFTW's planner is not re-entrant; execution with the new-array interface
// is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

void fft_inplace(std::vector<Complex>& data, int dim, int n, int sign) {
  std::vector<int> dims(dim, n);
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan = fftw_plan_dft(dim, dims.data(), buf, buf, sign, FFTW_ESTIMATE);
  }
  fftw_execute_dft(plan, buf, buf);
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(plan);
}

int infer_grid_size(std::size_t count, int dim) {
  const auto n = static_cast<int>(
      std::llround(std::pow(static_cast<double>(count), 1.0 / dim)));
  if (n <= 0 || ipow(static_cast<std::size_t>(n), dim) != count) {
    throw Error(ErrorKind::kConfiguration,
                "sample count " + std::to_string(count) +
                    " is not a perfect power for dimension " +
                    std::to_string(dim));
  }
  return n;
}

// Row-major index of k (entries possibly negative) on an N^dim grid, k_j
// taken mod N.
std::size_t wrapped_index(std::span<const int> k, int n) {
  std::size_t idx = 0;
  for (int kj : k) {
    int w = kj % n;
    if (w < 0) w += n;
    idx = idx * static_cast<std::size_t>(n) + static_cast<std::size_t>(w);
  }
  return idx;
}

void check_compatible(const FourierSeries& a, const FourierSeries& b) {
  if (a.dim() != b.dim() || a.order() != b.order() ||
      a.value_dim() != b.value_dim()) {
    throw Error(ErrorKind::kConfiguration,
                "incompatible Fourier series shapes");
  }
}

// Phase table e^{i k y} for k = -K..K, stored at k + K. Recomputed from the
// exact angle every 16 steps to bound recurrence drift.
void fill_phases(double y, int order, std::span<Complex> table) {
  const Complex base = std::polar(1.0, y);
  table[order] = 1.0;
  Complex cur = 1.0;
  for (int j = 1; j <= order; ++j) {
    cur = (j % 16 == 0) ? std::polar(1.0, j * y) : cur * base;
    table[order + j] = cur;
    table[order - j] = std::conj(cur);
  }
}

}  // namespace

FourierSeries::FourierSeries(int dim, int order, int value_dim)
    : dim_(dim), order_(order), value_dim_(value_dim) {
  if (dim < 1 || order < 1 || value_dim < 1) {
    throw Error(ErrorKind::kConfiguration,
                "FourierSeries needs dim >= 1, order >= 1, value_dim >= 1");
  }
  mode_count_ = ipow(static_cast<std::size_t>(2 * order + 1), dim);
  coeffs_.assign(value_dim, std::vector<Complex>(mode_count_));
}

std::span<Complex> FourierSeries::coeffs(int component) {
  return coeffs_.at(component);
}

std::span<const Complex> FourierSeries::coeffs(int component) const {
  return coeffs_.at(component);
}

std::size_t FourierSeries::flat_index(std::span<const int> k) const {
  if (static_cast<int>(k.size()) != dim_) {
    throw Error(ErrorKind::kConfiguration, "mode has wrong dimension");
  }
  const std::size_t width = 2 * order_ + 1;
  std::size_t idx = 0;
  for (int kj : k) {
    if (std::abs(kj) > order_) {
      throw Error(ErrorKind::kConfiguration,
                  "mode outside retained cube: " +
                      format_mode({k.begin(), k.end()}));
    }
    idx = idx * width + static_cast<std::size_t>(kj + order_);
  }
  return idx;
}

std::vector<int> FourierSeries::mode(std::size_t flat) const {
  const std::size_t width = 2 * order_ + 1;
  std::vector<int> k(dim_);
  for (int j = dim_ - 1; j >= 0; --j) {
    k[j] = static_cast<int>(flat % width) - order_;
    flat /= width;
  }
  return k;
}

int FourierSeries::mode_l1(std::size_t flat) const {
  const std::size_t width = 2 * order_ + 1;
  int total = 0;
  for (int j = 0; j < dim_; ++j) {
    total += std::abs(static_cast<int>(flat % width) - order_);
    flat /= width;
  }
  return total;
}

Complex& FourierSeries::at(std::span<const int> k, int component) {
  return coeffs_.at(component)[flat_index(k)];
}

const Complex& FourierSeries::at(std::span<const int> k, int component) const {
  return coeffs_.at(component)[flat_index(k)];
}

Complex& FourierSeries::at(std::initializer_list<int> k, int component) {
  return at(std::span<const int>(k.begin(), k.size()), component);
}

const Complex& FourierSeries::at(std::initializer_list<int> k,
                                 int component) const {
  return at(std::span<const int>(k.begin(), k.size()), component);
}

bool FourierSeries::is_zero() const {
  for (const auto& c : coeffs_) {
    for (const auto& v : c) {
      if (v != Complex(0.0)) return false;
    }
  }
  return true;
}

double FourierSeries::symmetry_defect() const {
  double worst = 0.0;
  for (const auto& c : coeffs_) {
    for (std::size_t i = 0; i < mode_count_; ++i) {
      worst = std::max(worst, std::abs(c[mirror(i)] - std::conj(c[i])));
    }
  }
  return worst;
}

void FourierSeries::symmetrize() {
  for (auto& c : coeffs_) {
    for (std::size_t i = 0; i <= mode_count_ / 2; ++i) {
      const std::size_t j = mirror(i);
      const Complex avg = 0.5 * (c[i] + std::conj(c[j]));
      c[i] = avg;
      c[j] = std::conj(avg);
    }
  }
}

FourierSeries FourierSeries::component(int j) const {
  FourierSeries out(dim_, order_, 1);
  out.coeffs_[0] = coeffs_.at(j);
  return out;
}

FourierSeries FourierSeries::stack(std::span<const FourierSeries> components) {
  if (components.empty()) {
    throw Error(ErrorKind::kConfiguration, "cannot stack zero components");
  }
  const auto& first = components.front();
  FourierSeries out(first.dim(), first.order(),
                    static_cast<int>(components.size()));
  for (std::size_t j = 0; j < components.size(); ++j) {
    const auto& c = components[j];
    if (c.dim() != first.dim() || c.order() != first.order() ||
        c.value_dim() != 1) {
      throw Error(ErrorKind::kConfiguration,
                  "stacked components must be scalar with equal shape");
    }
    out.coeffs_[j] = c.coeffs_[0];
  }
  return out;
}

FourierSeries FourierSeries::resized(int new_order) const {
  FourierSeries out(dim_, new_order, value_dim_);
  const int keep = std::min(order_, new_order);
  for (std::size_t i = 0; i < mode_count_; ++i) {
    const auto k = mode(i);
    if (std::all_of(k.begin(), k.end(),
                    [keep](int kj) { return std::abs(kj) <= keep; })) {
      const std::size_t target = out.flat_index(k);
      for (int c = 0; c < value_dim_; ++c) {
        out.coeffs_[c][target] = coeffs_[c][i];
      }
    }
  }
  return out;
}

Complex FourierSeries::evaluate(std::span<const double> z,
                                int component) const {
  return evaluate_points(*this, z, component).front();
}

FourierSeries& FourierSeries::operator+=(const FourierSeries& other) {
  check_compatible(*this, other);
  for (int c = 0; c < value_dim_; ++c) {
    for (std::size_t i = 0; i < mode_count_; ++i) {
      coeffs_[c][i] += other.coeffs_[c][i];
    }
  }
  return *this;
}

FourierSeries& FourierSeries::operator-=(const FourierSeries& other) {
  check_compatible(*this, other);
  for (int c = 0; c < value_dim_; ++c) {
    for (std::size_t i = 0; i < mode_count_; ++i) {
      coeffs_[c][i] -= other.coeffs_[c][i];
    }
  }
  return *this;
}

FourierSeries& FourierSeries::operator*=(Complex scale) {
  for (auto& c : coeffs_) {
    for (auto& v : c) v *= scale;
  }
  return *this;
}

FourierSeries operator+(FourierSeries a, const FourierSeries& b) {
  a += b;
  return a;
}

FourierSeries operator-(FourierSeries a, const FourierSeries& b) {
  a -= b;
  return a;
}

FourierSeries operator*(Complex s, FourierSeries a) {
  a *= s;
  return a;
}

int grid_size_for(int order, int oversample) {
  if (oversample < 2) {
    throw Error(ErrorKind::kConfiguration, "oversampling factor must be >= 2");
  }
  return 2 * oversample * order;
}

std::vector<double> grid_node(std::size_t flat, int dim, int grid_size) {
  std::vector<double> x(dim);
  for (int j = dim - 1; j >= 0; --j) {
    x[j] = kTwoPi * static_cast<double>(flat % grid_size) / grid_size;
    flat /= grid_size;
  }
  return x;
}

FourierSeries from_grid(std::span<const Complex> samples, int dim, int order) {
  const int n = infer_grid_size(samples.size(), dim);
  if (n < 4 * order) {
    throw Error(ErrorKind::kConfiguration,
                "grid of " + std::to_string(n) + " points per axis cannot "
                "resolve order " + std::to_string(order) +
                " (need at least 4K)");
  }
  std::vector<Complex> data(samples.begin(), samples.end());
  fft_inplace(data, dim, n, FFTW_FORWARD);
  const double scale = 1.0 / static_cast<double>(samples.size());
  FourierSeries out(dim, order);
  auto c = out.coeffs();
  for (std::size_t i = 0; i < out.mode_count(); ++i) {
    c[i] = data[wrapped_index(out.mode(i), n)] * scale;
  }
  return out;
}

FourierSeries from_grid(std::span<const double> samples, int dim, int order) {
  std::vector<Complex> z(samples.begin(), samples.end());
  FourierSeries out = from_grid(std::span<const Complex>(z), dim, order);
  out.symmetrize();
  return out;
}

std::vector<Complex> to_grid(const FourierSeries& f, int grid_size,
                             int component) {
  if (grid_size < 1) {
    throw Error(ErrorKind::kConfiguration, "grid size must be positive");
  }
  std::vector<Complex> data(ipow(grid_size, f.dim()));
  const auto c = f.coeffs(component);
  for (std::size_t i = 0; i < f.mode_count(); ++i) {
    data[wrapped_index(f.mode(i), grid_size)] += c[i];
  }
  fft_inplace(data, f.dim(), grid_size, FFTW_BACKWARD);
  return data;
}

std::vector<double> to_real_grid(const FourierSeries& f, int grid_size,
                                 int component) {
  const auto z = to_grid(f, grid_size, component);
  std::vector<double> out(z.size());
  std::transform(z.begin(), z.end(), out.begin(),
                 [](Complex v) { return v.real(); });
  return out;
}

std::vector<Complex> evaluate_points(const FourierSeries& f,
                                     std::span<const double> points,
                                     int component) {
  const int m = f.dim();
  const int order = f.order();
  if (points.size() % m != 0) {
    throw Error(ErrorKind::kConfiguration,
                "point buffer length is not a multiple of the dimension");
  }
  const std::size_t count = points.size() / m;
  const std::size_t width = 2 * order + 1;
  const auto c = f.coeffs(component);

  std::vector<Complex> out(count);
  std::vector<Complex> phases(width * m);
  std::vector<Complex> buf(f.mode_count());
  for (std::size_t p = 0; p < count; ++p) {
    for (int a = 0; a < m; ++a) {
      fill_phases(points[p * m + a], order,
                  std::span<Complex>(phases).subspan(a * width, width));
    }
    if (m == 1) {
      Complex s = 0.0;
      for (std::size_t b = 0; b < width; ++b) s += c[b] * phases[b];
      out[p] = s;
      continue;
    }
    // Contract the last axis first; buffer shrinks by `width` each pass.
    std::size_t len = f.mode_count() / width;
    const Complex* src = c.data();
    for (int a = m - 1; a >= 0; --a) {
      const Complex* ph = phases.data() + a * width;
      for (std::size_t i = 0; i < len; ++i) {
        Complex s = 0.0;
        const Complex* row = src + i * width;
        for (std::size_t b = 0; b < width; ++b) s += row[b] * ph[b];
        buf[i] = s;
      }
      src = buf.data();
      if (a > 0) len /= width;
    }
    out[p] = buf[0];
  }
  return out;
}

std::vector<double> evaluate_points_real(const FourierSeries& f,
                                         std::span<const double> points,
                                         int component) {
  const auto z = evaluate_points(f, points, component);
  std::vector<double> out(z.size());
  std::transform(z.begin(), z.end(), out.begin(),
                 [](Complex v) { return v.real(); });
  return out;
}

StripNorm majorant_norm(const FourierSeries& f, double r) {
  if (!(r >= 0.0)) {
    throw Error(ErrorKind::kConfiguration, "strip radius must be >= 0");
  }
  std::vector<double> weight(f.mode_count());
  for (std::size_t i = 0; i < f.mode_count(); ++i) {
    weight[i] = std::exp(r * f.mode_l1(i));
  }
  double best = 0.0;
  for (int comp = 0; comp < f.value_dim(); ++comp) {
    const auto c = f.coeffs(comp);
    double total = 0.0;
    for (std::size_t i = 0; i < f.mode_count(); ++i) {
      total += std::abs(c[i]) * weight[i];
    }
    best = std::max(best, total);
  }
  return {r, best};
}

DecayFit decay_fit(const FourierSeries& f) {
  std::vector<double> magnitude(f.mode_count(), 0.0);
  for (int comp = 0; comp < f.value_dim(); ++comp) {
    const auto c = f.coeffs(comp);
    for (std::size_t i = 0; i < f.mode_count(); ++i) {
      magnitude[i] = std::max(magnitude[i], std::abs(c[i]));
    }
  }
  const double peak = *std::max_element(magnitude.begin(), magnitude.end());
  if (peak == 0.0) {
    throw Error(ErrorKind::kDegenerateInput,
                "decay fit of an identically zero series");
  }
  const double floor = 64.0 * std::numeric_limits<double>::epsilon() * peak;

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  int min_shell = std::numeric_limits<int>::max();
  int max_shell = -1;
  for (std::size_t i = 0; i < f.mode_count(); ++i) {
    if (magnitude[i] <= floor) continue;
    const double x = f.mode_l1(i);
    const double y = std::log(magnitude[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
    min_shell = std::min(min_shell, f.mode_l1(i));
    max_shell = std::max(max_shell, f.mode_l1(i));
  }
  if (min_shell == max_shell) {
    throw Error(ErrorKind::kDegenerateInput,
                "decay fit needs at least two nonzero coefficient shells");
  }
  const double dn = static_cast<double>(n);
  const double slope = (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
  DecayFit fit;
  fit.r = -slope;
  double log_m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < f.mode_count(); ++i) {
    if (magnitude[i] <= floor) continue;
    log_m = std::max(log_m, std::log(magnitude[i]) + fit.r * f.mode_l1(i));
  }
  fit.M = std::exp(log_m);
  return fit;
}

FourierSeries compose_displacement(const FourierSeries& p,
                                   const FourierSeries* h,
                                   std::span<const double> shift,
                                   int oversample) {
  const int m = p.dim();
  if (static_cast<int>(shift.size()) != m) {
    throw Error(ErrorKind::kConfiguration, "shift has wrong dimension");
  }
  if (h == nullptr || h->is_zero()) {
    FourierSeries out = p;
    for (std::size_t i = 0; i < p.mode_count(); ++i) {
      const auto k = p.mode(i);
      double phase = 0.0;
      for (int j = 0; j < m; ++j) phase += k[j] * shift[j];
      const Complex factor = std::polar(1.0, phase);
      for (int comp = 0; comp < p.value_dim(); ++comp) {
        out.coeffs(comp)[i] *= factor;
      }
    }
    return out;
  }
  if (h->dim() != m || h->value_dim() != m) {
    throw Error(ErrorKind::kConfiguration,
                "displacement must be a vector series on the same torus");
  }

  const int n = grid_size_for(std::max(p.order(), h->order()), oversample);
  const std::size_t count = ipow(n, m);
  std::vector<double> points(count * m);
  for (std::size_t i = 0; i < count; ++i) {
    const auto x = grid_node(i, m, n);
    for (int j = 0; j < m; ++j) points[i * m + j] = x[j] + shift[j];
  }
  for (int j = 0; j < m; ++j) {
    const auto hj = to_real_grid(*h, n, j);
    for (std::size_t i = 0; i < count; ++i) points[i * m + j] += hj[i];
  }

  const bool real = p.symmetry_defect() <= 1e-14 * (1.0 + majorant_norm(p, 0).value);
  std::vector<FourierSeries> parts;
  for (int comp = 0; comp < p.value_dim(); ++comp) {
    const auto values = evaluate_points(p, points, comp);
    parts.push_back(from_grid(std::span<const Complex>(values), m, p.order()));
  }
  FourierSeries out = FourierSeries::stack(parts);
  if (real) out.symmetrize();
  return out;
}

Complex mean(const FourierSeries& f, int component) {
  return f.coeffs(component)[f.mode_count() / 2];
}

FourierSeries remove_mean(FourierSeries f) {
  for (int comp = 0; comp < f.value_dim(); ++comp) {
    f.coeffs(comp)[f.mode_count() / 2] = 0.0;
  }
  return f;
}

FourierSeries derivative(const FourierSeries& f, int axis) {
  if (axis < 0 || axis >= f.dim()) {
    throw Error(ErrorKind::kConfiguration, "derivative axis out of range");
  }
  FourierSeries out = f;
  for (std::size_t i = 0; i < f.mode_count(); ++i) {
    const Complex factor(0.0, static_cast<double>(f.mode(i)[axis]));
    for (int comp = 0; comp < f.value_dim(); ++comp) {
      out.coeffs(comp)[i] *= factor;
    }
  }
  return out;
}

double strip_reconstruction_bound(double M, double delta, int dim) {
  const double base = (4.0 * dim - 4.0) / std::numbers::e;
  const double prefactor = dim == 1 ? 1.0 : std::pow(base, dim - 1);
  return 8.0 * prefactor * M * std::pow(delta, -dim);
}

std::vector<double> to_flat_record(const FourierSeries& f) {
  std::vector<double> out;
  out.reserve(3 + 2 * f.mode_count() * f.value_dim());
  out.push_back(f.dim());
  out.push_back(f.order());
  out.push_back(f.value_dim());
  for (int comp = 0; comp < f.value_dim(); ++comp) {
    for (const auto& c : f.coeffs(comp)) {
      out.push_back(c.real());
      out.push_back(c.imag());
    }
  }
  return out;
}

FourierSeries from_flat_record(std::span<const double> record) {
  if (record.size() < 3) {
    throw Error(ErrorKind::kValidation, "Fourier record too short");
  }
  auto as_int = [](double v, const char* what) {
    if (v != std::floor(v) || v < 1 || v > 1e6) {
      throw Error(ErrorKind::kValidation,
                  std::string("Fourier record has invalid ") + what);
    }
    return static_cast<int>(v);
  };
  FourierSeries f(as_int(record[0], "dim"), as_int(record[1], "order"),
                  as_int(record[2], "value_dim"));
  const std::size_t expected =
      3 + 2 * f.mode_count() * static_cast<std::size_t>(f.value_dim());
  if (record.size() != expected) {
    throw Error(ErrorKind::kValidation,
                "Fourier record has " + std::to_string(record.size()) +
                    " entries, expected " + std::to_string(expected));
  }
  std::size_t pos = 3;
  for (int comp = 0; comp < f.value_dim(); ++comp) {
    for (auto& c : f.coeffs(comp)) {
      c = Complex(record[pos], record[pos + 1]);
      pos += 2;
    }
  }
  return f;
}

}  // namespace rotkam
