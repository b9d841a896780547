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

#ifndef ROTKAM_FOURIER_H_
#define ROTKAM_FOURIER_H_

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace rotkam {

using Complex = std::complex<double>;

// Truncated Fourier series on the m-torus R^m / 2piZ^m.
//
// Coefficients c_k are kept for every k in the cube {-K..K}^m, stored dense
// and row-major in k (k_1 slowest), one array per value component. A series
// with value_dim == dim represents a vector field (e.g. the perturbation of
// a torus map); value_dim == 1 is a scalar function.
class FourierSeries {
 public:
  FourierSeries(int dim, int order, int value_dim = 1);

  int dim() const { return dim_; }
  int order() const { return order_; }
  int value_dim() const { return value_dim_; }
  // Number of retained modes per component, (2K+1)^m.
  std::size_t mode_count() const { return mode_count_; }

  std::span<Complex> coeffs(int component = 0);
  std::span<const Complex> coeffs(int component = 0) const;

  Complex& at(std::span<const int> k, int component = 0);
  const Complex& at(std::span<const int> k, int component = 0) const;
  Complex& at(std::initializer_list<int> k, int component = 0);
  const Complex& at(std::initializer_list<int> k, int component = 0) const;

  std::size_t flat_index(std::span<const int> k) const;
  std::vector<int> mode(std::size_t flat) const;
  // |k|_1 of the mode stored at `flat`.
  int mode_l1(std::size_t flat) const;
  // Flat index of -k for the mode stored at `flat`.
  std::size_t mirror(std::size_t flat) const { return mode_count_ - 1 - flat; }

  bool is_zero() const;
  // max_k |c_{-k} - conj(c_k)| over all components.
  double symmetry_defect() const;
  // Projects onto real-valued functions: c_k <- (c_k + conj(c_{-k})) / 2.
  void symmetrize();

  FourierSeries component(int j) const;
  static FourierSeries stack(std::span<const FourierSeries> components);
  // Zero-pads or truncates to a new order.
  FourierSeries resized(int new_order) const;

  Complex evaluate(std::span<const double> z, int component = 0) const;

  FourierSeries& operator+=(const FourierSeries& other);
  FourierSeries& operator-=(const FourierSeries& other);
  FourierSeries& operator*=(Complex scale);

 private:
  int dim_;
  int order_;
  int value_dim_;
  std::size_t mode_count_;
  std::vector<std::vector<Complex>> coeffs_;
};

FourierSeries operator+(FourierSeries a, const FourierSeries& b);
FourierSeries operator-(FourierSeries a, const FourierSeries& b);
FourierSeries operator*(Complex s, FourierSeries a);

// Majorant norm sum_k |c_k| e^{r|k|_1}; for vector series the max over
// components.
struct StripNorm {
  double radius = 0.0;
  double value = 0.0;
};

// Points per axis of the regular grid used for a series of the given order at
// the given oversampling factor (N = 2 * oversample * order).
int grid_size_for(int order, int oversample);

// Coordinates of grid node `flat` on the regular N^dim grid, x_j = 2 pi j / N.
std::vector<double> grid_node(std::size_t flat, int dim, int grid_size);

// Discrete Fourier coefficients of samples on a regular N^dim grid, keeping
// |k_j| <= order. Requires N >= 4 * order.
FourierSeries from_grid(std::span<const Complex> samples, int dim, int order);
FourierSeries from_grid(std::span<const double> samples, int dim, int order);

// Samples of one component on the regular N^dim grid. Modes beyond the
// Nyquist band fold onto their aliases, so the samples are always exact.
std::vector<Complex> to_grid(const FourierSeries& f, int grid_size,
                             int component = 0);
std::vector<double> to_real_grid(const FourierSeries& f, int grid_size,
                                 int component = 0);

// Evaluates one component at scattered points (row-major, dim coordinates
// each). Cost is O(points * (2K+1)^dim).
std::vector<Complex> evaluate_points(const FourierSeries& f,
                                     std::span<const double> points,
                                     int component = 0);
std::vector<double> evaluate_points_real(const FourierSeries& f,
                                         std::span<const double> points,
                                         int component = 0);

StripNorm majorant_norm(const FourierSeries& f, double r);

struct DecayFit {
  double M = 0.0;
  double r = 0.0;
};

// Least-squares fit of log|c_k| against -|k|_1, then M is inflated so that
// |c_k| <= M e^{-|k|_1 r} for every mode above the round-off floor
// (64 eps max|c|). Modes below the floor are treated as zero.
DecayFit decay_fit(const FourierSeries& f);

// The series of z -> p(z + shift + h(z)). `h` must be real-valued with
// value_dim == dim. With no `h` (or h == 0) the shift theorem is applied
// exactly; otherwise composition happens on a grid oversampled by
// `oversample` relative to max(order p, order h) and is projected back to the
// order of p.
FourierSeries compose_displacement(const FourierSeries& p,
                                   const FourierSeries* h,
                                   std::span<const double> shift,
                                   int oversample = 4);

Complex mean(const FourierSeries& f, int component = 0);
FourierSeries remove_mean(FourierSeries f);
FourierSeries derivative(const FourierSeries& f, int axis);

// Bound of the strip-reconstruction estimate: a series with
// |c_k| <= M e^{-|k| r} has majorant norm at most
// 8 ((4m-4)/e)^{m-1} M delta^{-m} on the strip of radius r - delta, for
// 0 < delta < min(1, r). 0^0 is taken as 1 for m = 1.
double strip_reconstruction_bound(double M, double delta, int dim);

// Flat record: dim, order, value_dim, then (re, im) per coefficient, component
// by component, each component row-major over k.
std::vector<double> to_flat_record(const FourierSeries& f);
FourierSeries from_flat_record(std::span<const double> record);

}  // namespace rotkam

#endif  // ROTKAM_FOURIER_H_
