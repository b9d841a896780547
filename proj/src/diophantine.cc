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

#include "rotkam/diophantine.h"

#include <array>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <string>

#include "rotkam/errors.h"

namespace rotkam {
namespace {

long double reduced_phase(std::span<const double> mu, std::span<const int> k) {
  long double t = 0.0L;
  for (std::size_t j = 0; j < mu.size(); ++j) {
    t += static_cast<long double>(mu[j]) * static_cast<long double>(k[j]);
  }
  return t - std::nearbyint(t);
}

// Visits every k in [-K, K]^dim with 0 < |k|_1 <= K whose first nonzero entry
// is positive, in lexicographic order.
template <typename Fn>
void for_each_half_lattice(int dim, int K, Fn&& fn) {
  std::vector<int> k(dim, -K);
  while (true) {
    int l1 = 0;
    int first = 0;
    for (int v : k) {
      l1 += std::abs(v);
      if (first == 0) first = v;
    }
    if (first > 0 && l1 <= K) fn(k, l1);
    int j = dim - 1;
    while (j >= 0 && k[j] == K) {
      k[j] = -K;
      --j;
    }
    if (j < 0) break;
    ++k[j];
  }
}

}  // namespace

double small_divisor(std::span<const double> mu, std::span<const int> k) {
  const long double t = reduced_phase(mu, k);
  return static_cast<double>(2.0L * std::fabs(std::sin(std::numbers::pi_v<long double> * t)));
}

DiophantineCertificate certify(std::span<const double> mu, double nu, int K,
                               double work_budget) {
  if (K < 1 || !(nu > 0.0) || mu.empty()) {
    throw Error(ErrorKind::kConfiguration,
                "certify needs K >= 1, nu > 0 and a nonempty frequency vector");
  }
  const int m = static_cast<int>(mu.size());
  auto work = [m](int order) { return m * std::pow(2.0 * order + 1.0, m); };
  if (work(K) > work_budget) {
    int largest = 0;
    while (work(largest + 1) <= work_budget) ++largest;
    throw BudgetExceededError(
        largest, "certificate scan to K = " + std::to_string(K) +
                     " exceeds the work budget; largest feasible K is " +
                     std::to_string(largest));
  }
  DiophantineCertificate cert;
  cert.mu.assign(mu.begin(), mu.end());
  cert.nu = nu;
  cert.K_checked = K;
  cert.C_best = std::numeric_limits<double>::infinity();
  for_each_half_lattice(m, K, [&](const std::vector<int>& k, int l1) {
    const double scaled = small_divisor(mu, k) * std::pow(static_cast<double>(l1), nu);
    if (scaled < cert.C_best) {
      cert.C_best = scaled;
      cert.worst_k = k;
    }
  });
  return cert;
}

int default_certificate_order(int dim) { return dim == 1 ? 1000 : 100; }

std::vector<std::vector<int>> resonance_screen(std::span<const double> alpha,
                                               int K, double tol) {
  if (K < 1 || alpha.empty()) {
    throw Error(ErrorKind::kConfiguration,
                "resonance screen needs K >= 1 and a nonempty frequency vector");
  }
  std::vector<std::vector<int>> hits;
  for_each_half_lattice(static_cast<int>(alpha.size()), K,
                        [&](const std::vector<int>& k, int) {
                          if (std::fabs(reduced_phase(alpha, k)) < tol) {
                            hits.push_back(k);
                          }
                        });
  return hits;
}

double suggest_quadratic_irrational(int index) {
  static constexpr std::array<double, 6> kCatalog = {
      0.61803398874989484820458683436563812,  // (sqrt5 - 1) / 2
      0.41421356237309504880168872420969808,  // sqrt2 - 1
      0.73205080756887729352744634150587237,  // sqrt3 - 1
      0.30277563773199464655961063373524797,  // (sqrt13 - 3) / 2
      0.23606797749978969640917366873127624,  // sqrt5 - 2
      0.36602540378443864676372317075293618,  // (sqrt3 - 1) / 2
  };
  if (index < 0 || index >= static_cast<int>(kCatalog.size())) {
    throw Error(ErrorKind::kLookup,
                "no catalogued quadratic irrational with index " +
                    std::to_string(index));
  }
  return kCatalog[index];
}

}  // namespace rotkam
