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

#ifndef ROTKAM_ERRORS_H_
#define ROTKAM_ERRORS_H_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace rotkam {

// Every failure raised by the library derives from Error and carries a
// category, which the command-line driver maps onto its exit status.
enum class ErrorKind {
  kConfiguration,  // bad parameters or grid sizes
  kValidation,     // inputs violating a documented contract
  kDegenerateInput,
  kEvaluation,     // non-finite values produced by a user callable
  kUnsolvable,     // homological equation with nonzero mean
  kResonance,
  kInversion,
  kDivergence,
  kBudgetExceeded,
  kUnsupported,
  kLookup,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// Raised when a small divisor vanishes; `mode` is the offending lattice
// vector.
class ResonanceError : public Error {
 public:
  ResonanceError(std::vector<int> mode, const std::string& what)
      : Error(ErrorKind::kResonance, what), mode_(std::move(mode)) {}
  const std::vector<int>& mode() const { return mode_; }

 private:
  std::vector<int> mode_;
};

// Raised by the conjugation loop; carries the residual trace up to failure.
class DivergenceError : public Error {
 public:
  DivergenceError(int stage, std::vector<double> residuals,
                  const std::string& what)
      : Error(ErrorKind::kDivergence, what),
        stage_(stage),
        residuals_(std::move(residuals)) {}
  int stage() const { return stage_; }
  const std::vector<double>& residuals() const { return residuals_; }

 private:
  int stage_;
  std::vector<double> residuals_;
};

class BudgetExceededError : public Error {
 public:
  BudgetExceededError(int largest_completed, const std::string& what)
      : Error(ErrorKind::kBudgetExceeded, what),
        largest_completed_(largest_completed) {}
  int largest_completed() const { return largest_completed_; }

 private:
  int largest_completed_;
};

std::string format_mode(const std::vector<int>& k);

}  // namespace rotkam

#endif  // ROTKAM_ERRORS_H_
