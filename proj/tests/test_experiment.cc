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

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "rotkam/experiment.h"

namespace rotkam {
namespace {

using nlohmann::json;
using Row = std::map<std::string, std::string>;
using Tables = std::map<std::string, std::vector<Row>>;

struct Outcome {
  int status;
  std::string out;
  std::string diag;
};

Outcome run(const json& config, RunOptions options = {}) {
  std::ostringstream out, diag;
  const int status = run_experiment(config, options, out, diag);
  return {status, out.str(), diag.str()};
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      cells.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  cells.push_back(cur);
  return cells;
}

Tables parse_csv(const std::string& text) {
  Tables t;
  std::istringstream in(text);
  std::string line, section;
  std::vector<std::string> header;
  bool want_header = false;
  std::getline(in, line);
  EXPECT_EQ(line.rfind("# rotkam-results v1", 0), 0u) << line;
  while (std::getline(in, line)) {
    if (line.rfind("# section ", 0) == 0) {
      section = line.substr(10);
      want_header = true;
      t[section];
      continue;
    }
    const auto cells = split_csv(line);
    if (want_header) {
      header = cells;
      want_header = false;
      continue;
    }
    Row r;
    EXPECT_EQ(cells.size(), header.size());
    for (std::size_t i = 0; i < header.size() && i < cells.size(); ++i) r[header[i]] = cells[i];
    t[section].push_back(r);
  }
  return t;
}

json last_diag(const std::string& diag) {
  std::istringstream in(diag);
  std::string line, last;
  while (std::getline(in, line)) {
    if (!line.empty()) last = line;
  }
  return json::parse(last);
}

double num(const Row& r, const std::string& key) { return std::stod(r.at(key)); }

TEST(ExperimentTest, PureRotationMapEstimate) {
  const auto o = run({{"command", "rotno-map"},
                      {"map", {{"family", "rotation"}, {"rho", 0.25}}},
                      {"n", 1000}});
  ASSERT_EQ(o.status, 0) << o.diag;
  const auto t = parse_csv(o.out);
  ASSERT_EQ(t.at("result").size(), 1u);
  EXPECT_EQ(num(t.at("result")[0], "value"), 0.25);
  EXPECT_NEAR(num(t.at("result")[0], "enclosure_lo"), 0.249, 1e-15);
  EXPECT_EQ(t.at("result")[0].at("convention"), "map");
  EXPECT_GE(t.at("checkpoints").size(), 2u);
}

TEST(ExperimentTest, ResonantKamExitsWithModeTwo) {
  const json config = {
      {"command", "kam"},
      {"system",
       {{"type", "torus_map"},
        {"mu", {0.5}},
        {"p", {{{"dim", 1}, {"order", 2}, {"modes", {{{"k", {2}}, {"c", {0.0, -5e-4}}}}}}}}}}};
  const auto o = run(config);
  EXPECT_EQ(o.status, 3);
  const auto d = last_diag(o.diag);
  EXPECT_EQ(d["kind"], "resonance");
  EXPECT_EQ(d["mode"], json::array({2}));
  EXPECT_NE(d["message"].get<std::string>().find("(2)"), std::string::npos);
  EXPECT_TRUE(o.out.empty());
}

TEST(ExperimentTest, ComposeMatchesWeightedAverage) {
  const json config = {{"command", "compose"},
                       {"maps",
                        {{{"family", "rotation"}, {"rho", 0.1}},
                         {{"family", "rotation"}, {"rho", 0.2}}}},
                       {"probs", {0.3, 0.7}},
                       {"n", 1000000},
                       {"ensemble", 4},
                       {"seed", 11}};
  const auto o = run(config);
  ASSERT_EQ(o.status, 0) << o.diag;
  const auto r = parse_csv(o.out).at("result")[0];
  EXPECT_NEAR(num(r, "value"), 0.17, 3e-3);
  EXPECT_NEAR(num(r, "predicted"), 0.17, 1e-15);
}

TEST(ExperimentTest, ComposeRequiresSeed) {
  const json config = {{"command", "compose"},
                       {"maps", {{{"family", "rotation"}, {"rho", 0.1}}}},
                       {"probs", {1.0}},
                       {"n", 100}};
  const auto o = run(config);
  EXPECT_EQ(o.status, 2);
  EXPECT_EQ(last_diag(o.diag)["path"], "$.seed");
  RunOptions with_seed;
  with_seed.seed = 4;
  EXPECT_EQ(run(config, with_seed).status, 0);
}

TEST(ExperimentTest, OdeEstimate) {
  const auto o = run({{"command", "rotno-ode"},
                      {"field", {{"family", "cosine"}, {"a", 2.0}, {"b", 1.0}}},
                      {"T", 1000.0},
                      {"dt", 0.01},
                      {"x0", {0.0, 1.7}}});
  ASSERT_EQ(o.status, 0) << o.diag;
  const auto rows = parse_csv(o.out).at("result");
  ASSERT_EQ(rows.size(), 2u);
  for (const auto& r : rows) EXPECT_NEAR(num(r, "value"), std::sqrt(3.0), 1e-5);
  EXPECT_EQ(rows[0].at("convention"), "ode");
}

TEST(ExperimentTest, DiophantineCertificateAndScreen) {
  const auto o = run({{"command", "dioph"},
                      {"quadratic_index", 0},
                      {"nu", 1.0},
                      {"K", 1000},
                      {"screen", {{"K", 50}}}});
  ASSERT_EQ(o.status, 0) << o.diag;
  const auto t = parse_csv(o.out);
  const auto& c = t.at("certificate")[0];
  EXPECT_EQ(c.at("worst_k"), "(1)");
  EXPECT_GT(num(c, "C_best"), 0.0);
  EXPECT_TRUE(t.at("resonances").empty());
}

TEST(ExperimentTest, DiophantineBudgetExceeded) {
  const auto o = run({{"command", "dioph"},
                      {"mu", {0.1, 0.2, 0.3}},
                      {"nu", 3.0},
                      {"K", 1000},
                      {"work_budget", 1e6}});
  EXPECT_EQ(o.status, 4);
  const auto d = last_diag(o.diag);
  EXPECT_EQ(d["kind"], "budget_exceeded");
  EXPECT_GE(d["largest_feasible"].get<int>(), 1);
}

TEST(ExperimentTest, KamSineFamilyConverges) {
  const auto o = run({{"command", "kam"},
                      {"system",
                       {{"type", "sine_family"},
                        {"eps", 1e-3},
                        {"target_rho", 0.6180339887498949}}}});
  ASSERT_EQ(o.status, 0) << o.diag;
  const auto t = parse_csv(o.out);
  const auto& r = t.at("result")[0];
  EXPECT_EQ(r.at("status"), "converged");
  EXPECT_LT(num(r, "defect"), 1e-10);
  EXPECT_GE(t.at("history").size(), 2u);
  EXPECT_EQ(num(t.at("conjugacy")[0], "value"), 1.0);  // dim
}

TEST(ExperimentTest, KamUnmatchedTwoTorusReportsDivergence) {
  const json sin_diag = {{"dim", 2}, {"order", 1}, {"modes", {{{"k", {1, 1}}, {"c", {0.0, -5e-5}}}}}};
  const json cos_first = {{"dim", 2}, {"order", 1}, {"modes", {{{"k", {1, 0}}, {"c", {5e-5, 0.0}}}}}};
  const auto o = run({{"command", "kam"},
                      {"system",
                       {{"type", "torus_map"},
                        {"mu", {0.6180339887498949, 0.41421356237309503}},
                        {"p", {sin_diag, cos_first}}}}});
  EXPECT_EQ(o.status, 3);
  const auto d = last_diag(o.diag);
  EXPECT_EQ(d["kind"], "divergence");
  EXPECT_FALSE(d["residuals"].empty());
}

TEST(SweepTest, UnperturbedStaircaseIsDiagonal) {
  const auto o = run({{"command", "sweep"},
                      {"map", {{"family", "arnold"}, {"eps", 0.0}}},
                      {"axes", {{{"name", "omega"}, {"lo", 0.0}, {"hi", 1.0}, {"count", 101}}}},
                      {"n", 1000}});
  ASSERT_EQ(o.status, 0) << o.diag;
  const auto rows = parse_csv(o.out).at("sweep");
  ASSERT_EQ(rows.size(), 101u);
  for (const auto& r : rows) EXPECT_NEAR(num(r, "value"), num(r, "omega"), 1e-14);
}

TEST(SweepTest, MonotoneColumn) {
  const std::uint64_t n = 10000;
  const auto o = run({{"command", "sweep"},
                      {"map", {{"family", "arnold"}, {"eps", 0.9}}},
                      {"axes", {{{"name", "omega"}, {"lo", 0.0}, {"hi", 1.0}, {"count", 201}}}},
                      {"n", n}});
  ASSERT_EQ(o.status, 0) << o.diag;
  const auto rows = parse_csv(o.out).at("sweep");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_GE(num(rows[i], "value"), num(rows[i - 1], "value") - 2.0 / n);
  }
}

TEST(SweepTest, TongueDatasetKeepsFailedPoints) {
  const auto o = run({{"command", "sweep"},
                      {"map", {{"family", "arnold"}}},
                      {"axes",
                       {{{"name", "omega"}, {"lo", 0.4}, {"hi", 0.6}, {"count", 101}},
                        {{"name", "eps"}, {"lo", 0.0}, {"hi", 1.0}, {"count", 21}}}},
                      {"n", 20000}});
  ASSERT_EQ(o.status, 0) << o.diag;
  const auto rows = parse_csv(o.out).at("sweep");
  ASSERT_EQ(rows.size(), 101u * 21u);
  int failed = 0;
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& r : rows) {
    if (r.at("status") != "ok") {
      ++failed;
      EXPECT_EQ(num(r, "eps"), 1.0);
      EXPECT_TRUE(r.at("value").empty());
      continue;
    }
    if (num(r, "eps") == 0.5 && num(r, "enclosure_lo") <= 0.5 && num(r, "enclosure_hi") >= 0.5) {
      lo = std::min(lo, num(r, "omega"));
      hi = std::max(hi, num(r, "omega"));
    }
  }
  EXPECT_EQ(failed, 101);
  EXPECT_GT(hi - lo, 0.0);
}

TEST(SweepTest, OrderIndependentOfJobs) {
  const json config = {{"command", "sweep"},
                       {"map", {{"family", "arnold"}, {"eps", 0.7}}},
                       {"axes", {{{"name", "omega"}, {"lo", 0.0}, {"hi", 1.0}, {"count", 57}}}},
                       {"n", 3000}};
  RunOptions one, many;
  one.jobs = 1;
  many.jobs = 4;
  EXPECT_EQ(run(config, one).out, run(config, many).out);
}

TEST(FormatTest, JsonLines) {
  RunOptions o;
  o.format = OutputFormat::kJsonLines;
  const auto r = run({{"command", "rotno-map"},
                      {"map", {{"family", "rotation"}, {"rho", 0.25}}},
                      {"n", 16}},
                     o);
  ASSERT_EQ(r.status, 0);
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  const auto head = json::parse(line);
  EXPECT_EQ(head["schema"], "rotkam-results");
  EXPECT_EQ(head["version"], 1);
  std::getline(in, line);
  const auto first = json::parse(line);
  EXPECT_EQ(first["section"], "result");
  EXPECT_EQ(first["value"], 0.25);
  while (std::getline(in, line)) EXPECT_NO_THROW(json::parse(line));
  EXPECT_THROW(parse_output_format("xml"), Error);
}

struct BadConfig {
  json config;
  std::string path;
};

TEST(SchemaTest, MalformedFieldsNameTheirPath) {
  const json rot = {{"family", "rotation"}, {"rho", 0.1}};
  const std::vector<BadConfig> cases = {
      {json::array(), "$"},
      {{{"n", 5}}, "$.command"},
      {{{"command", "bogus"}}, "$.command"},
      {{{"command", "rotno-map"}, {"map", rot}, {"n", -5}}, "$.n"},
      {{{"command", "rotno-map"}, {"map", rot}, {"n", "many"}}, "$.n"},
      {{{"command", "rotno-map"}, {"map", rot}, {"n", 10}, {"extra", 1}}, "$.extra"},
      {{{"command", "rotno-map"}, {"map", {{"family", "arnold"}, {"omega", 0.1}, {"eps", "x"}}}, {"n", 10}},
       "$.map.eps"},
      {{{"command", "rotno-map"}, {"map", {{"family", "arnold"}, {"omega", 0.1}, {"eps", 1.5}}}, {"n", 10}},
       "$.map.eps"},
      {{{"command", "rotno-map"}, {"map", {{"family", "spiral"}}}, {"n", 10}}, "$.map.family"},
      {{{"command", "rotno-map"}, {"map", rot}}, "$.n"},
      {{{"command", "rotno-map"}, {"map", rot}, {"n", 10}, {"driver", {{"kind", "bernoulli"}, {"probs", {0.5, 0.6}}}}, {"seed", 1}},
       "$.driver.probs"},
      {{{"command", "rotno-map"},
        {"map", {{"family", "fourier"}, {"rho0", 0.1},
                 {"displacement", {{"dim", 1}, {"order", 2}, {"modes", {{{"k", {3}}, {"c", {1.0, 0.0}}}}}}}}},
        {"n", 10}},
       "$.map.displacement.modes[0].k[0]"},
      {{{"command", "compose"}, {"maps", {rot}}, {"probs", {0.5, 0.5}}, {"n", 10}, {"seed", 1}}, "$.probs"},
      {{{"command", "rotno-ode"}, {"field", {{"family", "cosine"}, {"a", 1.0}}}, {"T", 10.0}, {"dt", -1.0}}, "$.dt"},
      {{{"command", "dioph"}, {"mu", {0.3}}, {"nu", 0.0}}, "$.nu"},
      {{{"command", "dioph"}, {"nu", 1.0}, {"quadratic_index", 99}}, "$.quadratic_index"},
      {{{"command", "kam"}, {"system", {{"type", "galaxy"}}}}, "$.system.type"},
      {{{"command", "kam"}, {"system", {{"type", "sine_family"}, {"eps", 1e-3}, {"target_rho", 0.6}}},
        {"kam", {{"delta0", 0.9}}}},
       "$.kam"},
      {{{"command", "sweep"}, {"map", {{"family", "arnold"}, {"eps", 0.1}}},
        {"axes", {{{"name", "omega"}, {"lo", 0.0}, {"hi", 1.0}, {"count", 1}}}}, {"n", 10}},
       "$.axes[0].count"},
      {{{"command", "sweep"}, {"map", {{"family", "arnold"}, {"eps", 0.1}}},
        {"axes", {{{"name", "phase"}, {"lo", 0.0}, {"hi", 1.0}, {"count", 3}}}}, {"n", 10}},
       "$.axes[0].name"},
      {{{"command", "sweep"}, {"map", {{"family", "arnold"}}},
        {"axes", {{{"name", "omega"}, {"lo", 0.0}, {"hi", 1.0}, {"count", 3}}}}, {"n", 10}},
       "$.map.eps"},
  };
  for (const auto& c : cases) {
    const auto o = run(c.config);
    EXPECT_EQ(o.status, 2) << c.config.dump();
    const auto d = last_diag(o.diag);
    EXPECT_EQ(d["path"], c.path) << c.config.dump() << "\n" << o.diag;
    EXPECT_TRUE(o.out.empty());
  }
  std::ostringstream out, diag;
  EXPECT_EQ(run_experiment_text("{\"command\": ", {}, out, diag), 2);
  EXPECT_EQ(last_diag(diag.str())["path"], "$");
}

// --- The command-line binary --------------------------------------------

std::string temp_path(const std::string& name) { return testing::TempDir() + "rotkam_" + name; }

void write_file(const std::string& path, const std::string& text) {
  std::ofstream(path) << text;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

int cli(const std::string& args) {
  const std::string cmd = std::string(ROTKAM_CLI_PATH) + " " + args + " 2>" + temp_path("stderr.txt");
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

TEST(CliTest, ReproducibleResultFiles) {
  const std::string cfg = temp_path("compose.json");
  write_file(cfg, R"({"maps": [{"family": "conjugated_rotation", "rho": 0.1, "a": 0.5},
                               {"family": "conjugated_rotation", "rho": 0.2, "a": 0.5}],
                      "probs": [0.3, 0.7], "n": 20000, "ensemble": 4, "seed": 3})");
  const std::string a = temp_path("a.csv"), b = temp_path("b.csv"), c = temp_path("c.csv");
  ASSERT_EQ(cli("compose --config " + cfg + " --out " + a + " --jobs 1"), 0);
  ASSERT_EQ(cli("compose --config " + cfg + " --out " + b + " --jobs 3"), 0);
  EXPECT_EQ(read_file(a), read_file(b));
  EXPECT_FALSE(read_file(a).empty());
  ASSERT_EQ(cli("compose --config " + cfg + " --out " + c + " --seed 4"), 0);
  EXPECT_NE(read_file(a), read_file(c));
}

TEST(CliTest, ExitCodes) {
  const std::string ok = temp_path("ok.json");
  write_file(ok, R"({"map": {"family": "rotation", "rho": 0.25}, "n": 100})");
  EXPECT_EQ(cli("rotno-map --config " + ok + " --out " + temp_path("ok.csv")), 0);
  EXPECT_EQ(cli("rotno-map --config " + ok + " --format jsonl --out " + temp_path("ok.jsonl")), 0);
  EXPECT_EQ(json::parse(read_file(temp_path("ok.jsonl")).substr(0, read_file(temp_path("ok.jsonl")).find('\n')))["schema"],
            "rotkam-results");
  // Config command must agree with the subcommand.
  EXPECT_EQ(cli("dioph --config " + ok), 2);
  EXPECT_EQ(cli("rotno-map --config " + temp_path("missing.json")), 2);
  EXPECT_EQ(cli("rotno-map"), 2);

  const std::string res = temp_path("res.json");
  write_file(res, R"({"system": {"type": "torus_map", "mu": [0.5],
      "p": [{"dim": 1, "order": 2, "modes": [{"k": [2], "c": [0.0, -0.0005]}]}]}})");
  EXPECT_EQ(cli("kam --config " + res), 3);
  const auto d = json::parse(read_file(temp_path("stderr.txt")));
  EXPECT_EQ(d["mode"], json::array({2}));

  const std::string budget = temp_path("budget.json");
  write_file(budget, R"({"mu": [0.1, 0.2, 0.3], "nu": 3, "K": 2000})");
  EXPECT_EQ(cli("dioph --config " + budget), 4);
}

}  // namespace
}  // namespace rotkam
