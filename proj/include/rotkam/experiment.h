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

// Config-driven experiments: parse a JSON config, dispatch to the numerical
// modules and emit versioned CSV or JSON-lines results.

#ifndef ROTKAM_EXPERIMENT_H_
#define ROTKAM_EXPERIMENT_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"
#include "rotkam/errors.h"

namespace rotkam {

inline constexpr int kResultSchemaVersion = 1;

enum class OutputFormat { kCsv, kJsonLines };

OutputFormat parse_output_format(std::string_view name);

struct RunOptions {
  std::optional<std::uint64_t> seed;  // overrides the config seed
  unsigned jobs = 0;                  // 0: all cores
  bool verbose = false;
  OutputFormat format = OutputFormat::kCsv;
};

// Malformed config; path is a JSON path such as "$.map.eps".
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& what)
      : Error(ErrorKind::kValidation, path + ": " + what),
        path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

// 0 success, 2 invalid input, 3 divergence or resonance, 4 budget exceeded,
// 1 anything else.
int exit_code_for(ErrorKind kind);

// Runs one experiment. Results go to `out`, one-line JSON diagnostics to
// `diag`. Never throws; the return value is the process exit status.
int run_experiment(const nlohmann::json& config, const RunOptions& options,
                   std::ostream& out, std::ostream& diag);
int run_experiment_text(std::string_view config_text,
                        const RunOptions& options, std::ostream& out,
                        std::ostream& diag);

}  // namespace rotkam

#endif  // ROTKAM_EXPERIMENT_H_
