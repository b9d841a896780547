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

#ifndef ROTKAM_DIOPHANTINE_H_
#define ROTKAM_DIOPHANTINE_H_

#include <cstdint>
#include <span>
#include <vector>

namespace rotkam {

// Finite-order evidence that mu is of type (C, nu):
//   |e^{2 pi i <mu,k>} - 1| >= C_best / |k|_1^nu   for 0 < |k|_1 <= K_checked.
struct DiophantineCertificate {
  std::vector<double> mu;
  double nu = 0.0;
  int K_checked = 0;
  double C_best = 0.0;
  std::vector<int> worst_k;

  bool resonant() const { return C_best == 0.0; }
};

// |e^{2 pi i <mu,k>} - 1| computed as 2|sin(pi t)| with t = <mu,k> reduced
// mod 1 in extended precision.
double small_divisor(std::span<const double> mu, std::span<const int> k);

// Exhaustive scan over 0 < |k|_1 <= K, one representative per pair +-k.
// Throws BudgetExceededError when dim * (2K+1)^dim exceeds `work_budget`.
DiophantineCertificate certify(std::span<const double> mu, double nu, int K,
                               double work_budget = 1e9);

// Default scan order: 1000 for a single frequency, 100 otherwise.
int default_certificate_order(int dim);

// All k with 0 < |k|_1 <= K and dist(<alpha,k>, Z) < tol, one representative
// per pair +-k. An empty result certifies non-resonance up to K.
std::vector<std::vector<int>> resonance_screen(std::span<const double> alpha,
                                               int K, double tol = 1e-9);

// Catalogued badly approximable numbers: 0 -> (sqrt5-1)/2, 1 -> sqrt2-1,
// 2 -> sqrt3-1, 3 -> (sqrt13-3)/2, 4 -> sqrt5-2, 5 -> (sqrt3-1)/2.
double suggest_quadratic_irrational(int index);

}  // namespace rotkam

#endif  // ROTKAM_DIOPHANTINE_H_
