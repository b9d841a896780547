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

// rotkam command-line driver.
//
//   rotkam <command> --config run.json [--out results.csv] [--seed N]
//          [--jobs N] [--format csv|jsonl] [--verbose]

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>

#include "CLI11.hpp"
#include "json.hpp"
#include "rotkam/experiment.h"

namespace {

void diag_error(const std::string& path, const std::string& message) {
  nlohmann::ordered_json line{{"level", "error"},
                              {"kind", "validation"},
                              {"path", path},
                              {"message", message}};
  std::cerr << line.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rotation numbers and KAM conjugacies of circle and torus maps"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::string out_path;
  std::uint64_t seed = 0;
  unsigned jobs = 0;
  bool verbose = false;
  std::string format = "csv";

  const std::pair<const char*, const char*> commands[] = {
      {"rotno-map", "rotation number of a (driven) circle map"},
      {"rotno-ode", "rotation number of a scalar periodic ODE"},
      {"compose", "i.i.d. composition of circle maps"},
      {"kam", "KAM conjugacy to a rigid rotation"},
      {"dioph", "Diophantine certificate and resonance screen"},
      {"sweep", "rotation numbers over a 1-D or 2-D parameter grid"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON config file")->required();
    sub->add_option("--out", out_path, "result file (default: stdout)");
    sub->add_option("--seed", seed, "seed, overrides the config");
    sub->add_option("--jobs", jobs, "worker threads (default: all cores)");
    sub->add_flag("--verbose", verbose, "progress diagnostics on stderr");
    sub->add_option("--format", format, "csv or jsonl")
        ->check(CLI::IsMember({"csv", "jsonl"}));
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  const CLI::App* sub = app.get_subcommands().front();
  const std::string command = sub->get_name();

  std::ifstream in(config_path);
  if (!in) {
    diag_error("--config", "cannot read " + config_path);
    return 2;
  }
  std::stringstream text;
  text << in.rdbuf();

  rotkam::RunOptions options;
  if (sub->count("--seed")) options.seed = seed;
  options.jobs = jobs;
  options.verbose = verbose;
  options.format = rotkam::parse_output_format(format);

  nlohmann::json config;
  try {
    config = nlohmann::json::parse(text.str());
  } catch (const nlohmann::json::parse_error& e) {
    diag_error("$", std::string("config is not valid JSON: ") + e.what());
    return 2;
  }
  if (config.is_object()) {
    if (!config.contains("command")) {
      config["command"] = command;
    } else if (!config["command"].is_string() ||
               config["command"].get<std::string>() != command) {
      diag_error("$.command", "does not match the subcommand '" + command + "'");
      return 2;
    }
  }

  if (out_path.empty()) {
    return rotkam::run_experiment(config, options, std::cout, std::cerr);
  }
  std::ostringstream buffer;
  const int status = rotkam::run_experiment(config, options, buffer, std::cerr);
  if (status == 0) {
    std::ofstream out(out_path, std::ios::binary);
    out << buffer.str();
    if (!out) {
      diag_error("--out", "cannot write " + out_path);
      return 2;
    }
  }
  return status;
}
