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

#include "rotkam/errors.h"

namespace rotkam {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfiguration: return "configuration";
    case ErrorKind::kValidation: return "validation";
    case ErrorKind::kDegenerateInput: return "degenerate_input";
    case ErrorKind::kEvaluation: return "evaluation";
    case ErrorKind::kUnsolvable: return "unsolvable";
    case ErrorKind::kResonance: return "resonance";
    case ErrorKind::kInversion: return "inversion";
    case ErrorKind::kDivergence: return "divergence";
    case ErrorKind::kBudgetExceeded: return "budget_exceeded";
    case ErrorKind::kUnsupported: return "unsupported";
    case ErrorKind::kLookup: return "lookup";
  }
  return "unknown";
}

std::string format_mode(const std::vector<int>& k) {
  std::string out = "(";
  for (std::size_t i = 0; i < k.size(); ++i) {
    if (i > 0) out += ",";
    out += std::to_string(k[i]);
  }
  return out + ")";
}

}  // namespace rotkam
