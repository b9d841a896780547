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

#include "rotkam/experiment.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "rotkam/diophantine.h"
#include "rotkam/dynamics.h"
#include "rotkam/fourier.h"
#include "rotkam/kam.h"
#include "rotkam/parallel.h"
#include "rotkam/rotation.h"

namespace rotkam {
namespace {

using nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Config access with JSON-path error messages.

class Node {
 public:
  Node(const json& value, std::string path) : v_(value), path_(std::move(path)) {}

  const std::string& path() const { return path_; }
  const json& raw() const { return v_; }
  bool has(const std::string& key) const { return v_.contains(key); }

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError(path_, what);
  }

  Node at(const std::string& key) const {
    if (!v_.is_object()) fail("expected an object");
    if (!v_.contains(key)) throw ConfigError(child(key), "required field missing");
    return Node(v_.at(key), child(key));
  }
  Node at(std::size_t i) const {
    return Node(v_.at(i), path_ + "[" + std::to_string(i) + "]");
  }

  // Rejects keys outside `allowed`.
  void keys(std::initializer_list<const char*> allowed) const {
    if (!v_.is_object()) fail("expected an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, _] : v_.items()) {
      if (!ok.count(k)) throw ConfigError(child(k), "unknown field");
    }
  }

  double number() const {
    if (!v_.is_number()) fail("expected a number");
    const double x = v_.get<double>();
    if (!std::isfinite(x)) fail("expected a finite number");
    return x;
  }
  double positive() const {
    const double x = number();
    if (!(x > 0.0)) fail("must be positive");
    return x;
  }
  std::int64_t integer() const {
    if (!v_.is_number_integer()) fail("expected an integer");
    return v_.get<std::int64_t>();
  }
  std::uint64_t count() const {
    if (v_.is_number_float()) {
      // Allow 1e6-style literals when they are exact integers.
      const double x = v_.get<double>();
      if (x >= 1.0 && x < 1.8e19 && std::floor(x) == x) {
        return static_cast<std::uint64_t>(x);
      }
      fail("expected a positive integer");
    }
    if (!v_.is_number_integer() || v_.get<std::int64_t>() < 1) {
      fail("expected a positive integer");
    }
    return v_.get<std::uint64_t>();
  }
  std::uint64_t seed() const {
    if (v_.is_number_unsigned()) return v_.get<std::uint64_t>();
    if (!v_.is_number_integer() || v_.get<std::int64_t>() < 0) {
      fail("expected a non-negative 64-bit integer");
    }
    return static_cast<std::uint64_t>(v_.get<std::int64_t>());
  }
  bool boolean() const {
    if (!v_.is_boolean()) fail("expected true or false");
    return v_.get<bool>();
  }
  std::string str() const {
    if (!v_.is_string()) fail("expected a string");
    return v_.get<std::string>();
  }
  std::size_t size() const {
    if (!v_.is_array()) fail("expected an array");
    return v_.size();
  }
  std::vector<double> numbers() const {
    std::vector<double> out;
    for (std::size_t i = 0; i < size(); ++i) out.push_back(at(i).number());
    return out;
  }

  double number_or(const std::string& key, double fallback) const {
    return has(key) ? at(key).number() : fallback;
  }
  std::uint64_t count_or(const std::string& key, std::uint64_t fallback) const {
    return has(key) ? at(key).count() : fallback;
  }
  bool boolean_or(const std::string& key, bool fallback) const {
    return has(key) ? at(key).boolean() : fallback;
  }

 private:
  std::string child(const std::string& key) const { return path_ + "." + key; }
  const json& v_;
  std::string path_;
};

int as_int(const Node& n, std::uint64_t v) {
  if (v > 1000000000ULL) n.fail("value too large");
  return static_cast<int>(v);
}

// ---------------------------------------------------------------------------
// Result emission.

using Cell = std::variant<std::monostate, double, std::int64_t, std::string>;

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

class ResultWriter {
 public:
  ResultWriter(std::ostream& out, OutputFormat format, const std::string& command)
      : out_(out), format_(format), command_(command) {
    if (format_ == OutputFormat::kCsv) {
      out_ << "# rotkam-results v" << kResultSchemaVersion
           << " command=" << command_ << "\n";
    } else {
      OrderedJson head;
      head["schema"] = "rotkam-results";
      head["version"] = kResultSchemaVersion;
      head["command"] = command_;
      out_ << head.dump() << "\n";
    }
  }

  void section(const std::string& name, std::vector<std::string> columns) {
    section_ = name;
    columns_ = std::move(columns);
    if (format_ == OutputFormat::kCsv) {
      out_ << "# section " << name << "\n";
      for (std::size_t i = 0; i < columns_.size(); ++i) {
        out_ << (i ? "," : "") << columns_[i];
      }
      out_ << "\n";
    }
  }

  void row(const std::vector<Cell>& cells) {
    if (cells.size() != columns_.size()) {
      throw Error(ErrorKind::kConfiguration, "internal: row width mismatch");
    }
    if (format_ == OutputFormat::kCsv) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out_ << ",";
        std::visit(
            [&](const auto& v) {
              using T = std::decay_t<decltype(v)>;
              if constexpr (std::is_same_v<T, double>) {
                out_ << format_double(v);
              } else if constexpr (std::is_same_v<T, std::int64_t>) {
                out_ << v;
              } else if constexpr (std::is_same_v<T, std::string>) {
                out_ << csv_escape(v);
              }
            },
            cells[i]);
      }
      out_ << "\n";
      return;
    }
    OrderedJson obj;
    obj["section"] = section_;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>) {
              obj[columns_[i]] = nullptr;
            } else if constexpr (std::is_same_v<T, double>) {
              if (std::isfinite(v)) {
                obj[columns_[i]] = v;
              } else {
                obj[columns_[i]] = format_double(v);
              }
            } else {
              obj[columns_[i]] = v;
            }
          },
          cells[i]);
    }
    out_ << obj.dump() << "\n";
  }

 private:
  std::ostream& out_;
  OutputFormat format_;
  std::string command_;
  std::string section_;
  std::vector<std::string> columns_;
};

Cell opt(const std::optional<double>& v) {
  return v ? Cell(*v) : Cell(std::monostate{});
}

std::string join(const std::vector<double>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ' ';
    s += format_double(xs[i]);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Diagnostics.

class Diagnostics {
 public:
  Diagnostics(std::ostream& diag, bool verbose) : diag_(diag), verbose_(verbose) {}

  void info(const std::string& event, OrderedJson fields = OrderedJson::object()) {
    if (!verbose_) return;
    OrderedJson line;
    line["level"] = "info";
    line["event"] = event;
    for (auto& [k, v] : fields.items()) line[k] = v;
    diag_ << line.dump() << "\n";
  }

  void error(ErrorKind kind, const std::string& message,
             OrderedJson fields = OrderedJson::object()) {
    OrderedJson line;
    line["level"] = "error";
    line["kind"] = to_string(kind);
    line["message"] = message;
    for (auto& [k, v] : fields.items()) line[k] = v;
    diag_ << line.dump() << "\n";
  }

 private:
  std::ostream& diag_;
  bool verbose_;
};

// ---------------------------------------------------------------------------
// Builders for maps, drivers and series.

FourierSeries parse_series(const Node& n) {
  n.keys({"dim", "order", "modes"});
  const int dim = as_int(n.at("dim"), n.at("dim").count());
  const int order = as_int(n.at("order"), n.at("order").count());
  if (dim > 6) n.at("dim").fail("torus dimension above 6 is not supported");
  FourierSeries f(dim, order);
  std::set<std::size_t> given;
  const Node modes = n.at("modes");
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const Node m = modes.at(i);
    m.keys({"k", "c"});
    const Node kn = m.at("k");
    if (kn.size() != static_cast<std::size_t>(dim)) kn.fail("needs dim entries");
    std::vector<int> k;
    for (std::size_t j = 0; j < kn.size(); ++j) {
      const auto v = kn.at(j).integer();
      if (std::abs(v) > order) kn.at(j).fail("exceeds the series order");
      k.push_back(static_cast<int>(v));
    }
    const Node cn = m.at("c");
    if (cn.size() != 2) cn.fail("expected [re, im]");
    const Complex c(cn.at(0).number(), cn.at(1).number());
    const std::size_t flat = f.flat_index(k);
    if (given.count(flat)) m.fail("duplicate mode");
    given.insert(flat);
    f.coeffs(0)[flat] = c;
  }
  // Real-valued functions: fill each missing mirror mode by conjugation and
  // reject inconsistent pairs.
  for (std::size_t flat : given) {
    const std::size_t mirror = f.mirror(flat);
    const Complex c = f.coeffs(0)[flat];
    if (!given.count(mirror)) {
      f.coeffs(0)[mirror] = std::conj(c);
    } else if (std::abs(f.coeffs(0)[mirror] - std::conj(c)) >
               1e-15 * std::max(1.0, std::abs(c))) {
      modes.fail("coefficients of k and -k must be complex conjugates");
    }
  }
  if (f.coeffs(0)[f.mode_count() / 2].imag() != 0.0) {
    modes.fail("the mean coefficient must be real");
  }
  return f;
}

CircleLift parse_lift(const Node& n) {
  const std::string family = n.at("family").str();
  if (family == "rotation") {
    n.keys({"family", "rho"});
    return pure_rotation(n.at("rho").number());
  }
  if (family == "arnold") {
    n.keys({"family", "omega", "eps"});
    const double eps = n.at("eps").number();
    if (!(std::abs(eps) < 1.0)) n.at("eps").fail("|eps| must be < 1");
    return make_arnold_family(n.at("omega").number(), eps);
  }
  if (family == "conjugated_rotation") {
    n.keys({"family", "rho", "a"});
    const double a = n.at("a").number();
    if (!(std::abs(a) < 1.0)) n.at("a").fail("|a| must be < 1");
    return conjugated_rotation(n.at("rho").number(), a);
  }
  if (family == "fourier") {
    n.keys({"family", "rho0", "displacement"});
    return lift_from_fourier(n.at("rho0").number(),
                             parse_series(n.at("displacement")));
  }
  if (family == "switched") {
    n.keys({"family", "maps"});
    const Node maps = n.at("maps");
    std::vector<CircleLift> lifts;
    for (std::size_t i = 0; i < maps.size(); ++i) {
      lifts.push_back(parse_lift(maps.at(i)));
    }
    if (lifts.empty()) maps.fail("needs at least one map");
    return switched_lift(std::move(lifts));
  }
  n.at("family").fail("unknown family '" + family +
                      "' (rotation, arnold, conjugated_rotation, fourier, "
                      "switched)");
}

std::optional<double> known_rotation(const Node& n) {
  const std::string family = n.at("family").str();
  if (family == "rotation" || family == "conjugated_rotation") {
    return n.at("rho").number();
  }
  if (family == "arnold" && n.at("eps").number() == 0.0) {
    return n.at("omega").number();
  }
  return std::nullopt;
}

std::optional<std::uint64_t> resolve_seed(const Node& root,
                                          const RunOptions& options) {
  if (options.seed) return options.seed;
  if (root.has("seed")) return root.at("seed").seed();
  return std::nullopt;
}

DrivingSystem parse_driver(const Node& n, std::optional<std::uint64_t> seed,
                           const Node& root) {
  const std::string kind = n.at("kind").str();
  if (kind == "trivial") {
    n.keys({"kind"});
    return DrivingSystem::trivial();
  }
  if (kind == "torus") {
    n.keys({"kind", "alpha"});
    return DrivingSystem::torus(n.at("alpha").numbers());
  }
  if (kind == "bernoulli") {
    n.keys({"kind", "probs"});
    if (!seed) throw ConfigError(root.path() + ".seed",
                                 "required for a stochastic driver");
    const Node pn = n.at("probs");
    auto probs = pn.numbers();
    double total = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (!(probs[i] > 0.0)) pn.at(i).fail("probabilities must be positive");
      total += probs[i];
    }
    if (probs.empty() || std::abs(total - 1.0) > 1e-12) {
      pn.fail("probabilities must sum to 1");
    }
    return DrivingSystem::bernoulli(std::move(probs), *seed);
  }
  n.at("kind").fail("unknown driver '" + kind + "' (trivial, torus, bernoulli)");
}

// ---------------------------------------------------------------------------
// Commands.

struct Context {
  const Node& root;
  const RunOptions& options;
  ResultWriter& out;
  Diagnostics& diag;
};

void write_estimate_checkpoints(ResultWriter& out, const RotationEstimate& e) {
  out.section("checkpoints", {"horizon", "value"});
  for (std::size_t i = 0; i < e.checkpoints.size(); ++i) {
    out.row({e.checkpoints[i], e.diagnostics[i]});
  }
}

void cmd_rotno_map(Context& ctx) {
  const Node& r = ctx.root;
  r.keys({"command", "map", "driver", "n", "x0", "omega0", "seed"});
  const auto seed = resolve_seed(r, ctx.options);
  const CircleLift lift = parse_lift(r.at("map"));
  const DrivingSystem driver =
      r.has("driver") ? parse_driver(r.at("driver"), seed, r)
                      : DrivingSystem::trivial();
  const auto n = r.at("n").count();
  if (n < 2) r.at("n").fail("must be at least 2");
  const double x0 = r.number_or("x0", 0.0);
  const std::vector<double> omega0 =
      r.has("omega0") ? r.at("omega0").numbers() : std::vector<double>{};
  const DriverState s0 = driver.initial_state(omega0);
  validate_lift(lift, s0);

  const RotationEstimate e = estimate_map(lift, driver, x0, s0, n);
  std::optional<std::pair<double, double>> box;
  if (driver.is_trivial() && !lift.driver_dependent) {
    box = deterministic_enclosure(lift, n).enclosure;
  }
  ctx.out.section("result", {"value", "horizon", "enclosure_lo",
                             "enclosure_hi", "convention", "status"});
  ctx.out.row({e.value, e.horizon,
               box ? Cell(box->first) : Cell(std::monostate{}),
               box ? Cell(box->second) : Cell(std::monostate{}),
               std::string(to_string(e.convention)), std::string("ok")});
  write_estimate_checkpoints(ctx.out, e);
}

void cmd_rotno_ode(Context& ctx) {
  const Node& r = ctx.root;
  r.keys({"command", "field", "T", "dt", "x0", "t0"});
  const Node f = r.at("field");
  f.keys({"family", "a", "b", "forcing_amplitude", "forcing_frequency",
          "forcing_phase"});
  const std::string family = f.at("family").str();
  if (family != "cosine") {
    f.at("family").fail("unknown field family '" + family + "' (cosine)");
  }
  const double a = f.at("a").number();
  const double b = f.number_or("b", 0.0);
  const double c = f.number_or("forcing_amplitude", 0.0);
  const double w = f.number_or("forcing_frequency", 1.0);
  const double ph = f.number_or("forcing_phase", 0.0);
  OdeField field;
  field.f = [=](double x, double t) {
    return a + b * std::cos(x) + c * std::cos(w * t + ph);
  };
  field.lipschitz_bound = std::max(std::abs(b), 1e-12);
  const double T = r.at("T").positive();
  const double dt = r.at("dt").positive();
  const double t0 = r.number_or("t0", 0.0);
  std::vector<double> x0s{0.0};
  if (r.has("x0")) {
    const Node xn = r.at("x0");
    x0s = xn.raw().is_array() ? xn.numbers() : std::vector<double>{xn.number()};
    if (x0s.empty()) xn.fail("needs at least one initial value");
  }
  ctx.out.section("result", {"x0", "value", "unweighted", "horizon",
                             "convention", "status"});
  for (double x0 : x0s) {
    const RotationEstimate e = estimate_ode(field, x0, T, dt, t0);
    ctx.out.row({x0, e.value, opt(e.unweighted), e.horizon,
                 std::string(to_string(e.convention)), std::string("ok")});
  }
}

void cmd_compose(Context& ctx) {
  const Node& r = ctx.root;
  r.keys({"command", "maps", "probs", "n", "ensemble", "seed"});
  const auto seed = resolve_seed(r, ctx.options);
  if (!seed) throw ConfigError(r.path() + ".seed", "required for compose");
  const Node mn = r.at("maps");
  std::vector<CircleLift> maps;
  std::vector<double> known;
  bool all_known = true;
  std::optional<std::string> shared_conjugacy;
  for (std::size_t i = 0; i < mn.size(); ++i) {
    const Node m = mn.at(i);
    maps.push_back(parse_lift(m));
    validate_lift(maps.back(), DriverState{});
    if (maps.back().driver_dependent) m.fail("compose needs deterministic maps");
    const auto rho = known_rotation(m);
    all_known = all_known && rho.has_value();
    if (rho) known.push_back(*rho);
    // The weighted-average formula holds for maps sharing one conjugacy.
    const std::string tag = m.at("family").str() == "conjugated_rotation"
                                ? format_double(m.at("a").number())
                                : std::string("0");
    if (shared_conjugacy && *shared_conjugacy != tag) all_known = false;
    shared_conjugacy = tag;
  }
  if (maps.empty()) mn.fail("needs at least one map");
  const Node pn = r.at("probs");
  const auto probs = pn.numbers();
  if (probs.size() != maps.size()) pn.fail("needs one probability per map");
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (!(probs[i] > 0.0)) pn.at(i).fail("probabilities must be positive");
    total += probs[i];
  }
  if (std::abs(total - 1.0) > 1e-12) pn.fail("probabilities must sum to 1");
  const auto n = r.at("n").count();
  if (n < 2) r.at("n").fail("must be at least 2");
  const int ensemble =
      r.has("ensemble") ? as_int(r.at("ensemble"), r.at("ensemble").count()) : 1;

  const RotationEstimate e = estimate_iid_composition(
      maps, probs, *seed, n, ensemble, ctx.options.jobs);
  std::optional<double> predicted;
  if (all_known) predicted = predicted_iid_rotation(known, probs);
  ctx.out.section("result", {"value", "std_dev", "predicted", "horizon",
                             "ensemble", "status"});
  ctx.out.row({e.value, opt(e.std_dev), opt(predicted), e.horizon,
               static_cast<std::int64_t>(ensemble), std::string("ok")});
  write_estimate_checkpoints(ctx.out, e);
}

void write_certificate(ResultWriter& out, const DiophantineCertificate& c) {
  out.section("certificate",
              {"mu", "nu", "K_checked", "C_best", "worst_k", "resonant"});
  out.row({join(c.mu), c.nu, static_cast<std::int64_t>(c.K_checked), c.C_best,
           format_mode(c.worst_k),
           std::string(c.resonant() ? "true" : "false")});
}

std::vector<double> parse_mu(const Node& r) {
  if (r.has("mu") == r.has("quadratic_index")) {
    r.fail("give exactly one of 'mu' and 'quadratic_index'");
  }
  if (r.has("mu")) {
    const Node mn = r.at("mu");
    auto mu = mn.raw().is_array() ? mn.numbers()
                                  : std::vector<double>{mn.number()};
    if (mu.empty()) mn.fail("needs at least one frequency");
    return mu;
  }
  const Node qi = r.at("quadratic_index");
  const auto idx = qi.integer();
  try {
    return {suggest_quadratic_irrational(static_cast<int>(idx))};
  } catch (const Error& e) {
    qi.fail(e.what());
  }
}

void cmd_dioph(Context& ctx) {
  const Node& r = ctx.root;
  r.keys({"command", "mu", "quadratic_index", "nu", "K", "work_budget",
          "screen"});
  const auto mu = parse_mu(r);
  const double nu = r.at("nu").positive();
  const int K = r.has("K") ? as_int(r.at("K"), r.at("K").count())
                           : default_certificate_order(static_cast<int>(mu.size()));
  const double budget = r.has("work_budget") ? r.at("work_budget").positive() : 1e9;
  const auto cert = certify(mu, nu, K, budget);
  write_certificate(ctx.out, cert);
  if (r.has("screen")) {
    const Node s = r.at("screen");
    s.keys({"K", "tol"});
    const int sk = as_int(s.at("K"), s.at("K").count());
    const double tol = s.has("tol") ? s.at("tol").positive() : 1e-9;
    ctx.out.section("resonances", {"k", "divisor"});
    for (const auto& k : resonance_screen(mu, sk, tol)) {
      ctx.out.row({format_mode(k), small_divisor(mu, k)});
    }
  }
}

KamConfig parse_kam_config(const Node& n, KamConfig config) {
  n.keys({"r0", "delta0", "max_stages", "base_order", "max_order", "oversample",
          "defect_target", "inversion_tol", "smallness", "adjust_translation",
          "defect_grid"});
  config.r0 = n.has("r0") ? n.at("r0").positive() : config.r0;
  config.delta0 = n.has("delta0") ? n.at("delta0").positive() : config.delta0;
  if (n.has("max_stages")) config.max_stages = as_int(n.at("max_stages"), n.at("max_stages").count());
  if (n.has("base_order")) config.base_order = as_int(n.at("base_order"), n.at("base_order").count());
  if (n.has("max_order")) config.max_order = as_int(n.at("max_order"), n.at("max_order").count());
  if (n.has("oversample")) config.oversample = as_int(n.at("oversample"), n.at("oversample").count());
  if (n.has("defect_target")) config.defect_target = n.at("defect_target").positive();
  if (n.has("inversion_tol")) config.inversion_tol = n.at("inversion_tol").positive();
  if (n.has("smallness")) config.smallness = n.at("smallness").positive();
  config.adjust_translation = n.boolean_or("adjust_translation", config.adjust_translation);
  if (n.has("defect_grid")) config.defect_grid = as_int(n.at("defect_grid"), n.at("defect_grid").count());
  try {
    config.validate();
  } catch (const Error& e) {
    n.fail(e.what());
  }
  return config;
}

void write_kam(ResultWriter& out, const ConjugacyResult& res,
               std::optional<double> parameter) {
  write_certificate(out, res.certificate);
  out.section("history", {"stage", "r", "delta", "order", "residual",
                          "mean_abs", "translation", "gamma_eff"});
  for (const auto& h : res.history) {
    out.row({static_cast<std::int64_t>(h.stage), h.r, h.delta,
             static_cast<std::int64_t>(h.order), h.residual, h.mean_abs,
             h.translation, h.gamma_eff});
  }
  out.section("conjugacy", {"index", "value"});
  const auto record = to_flat_record(res.fiber ? *res.fiber : res.h);
  for (std::size_t i = 0; i < record.size(); ++i) {
    out.row({static_cast<std::int64_t>(i), record[i]});
  }
  out.section("result", {"status", "defect", "defect_grid", "stages_used",
                         "translation", "parameter"});
  out.row({std::string(to_string(res.status)), res.defect,
           static_cast<std::int64_t>(res.defect_grid),
           static_cast<std::int64_t>(res.stages_used), res.translation,
           opt(parameter)});
}

void cmd_kam(Context& ctx) {
  const Node& r = ctx.root;
  r.keys({"command", "system", "nu", "K", "kam"});
  const Node s = r.at("system");
  const std::string type = s.at("type").str();
  std::optional<double> parameter;

  auto finish = [&](const TorusMap& map, KamConfig config, double nu,
                    const Node* kam_node) {
    if (kam_node) config = parse_kam_config(*kam_node, config);
    const int m = map.dim();
    const int top = std::max(config.max_order, map.p.order());
    const int K = r.has("K") ? as_int(r.at("K"), r.at("K").count())
                             : std::max(default_certificate_order(m), m * top);
    const auto cert = certify(map.mu, nu, K);
    if (cert.resonant()) {
      throw ResonanceError(cert.worst_k, "resonant rotation vector: divisor "
                                         "vanishes at k = " +
                                             format_mode(cert.worst_k));
    }
    ctx.diag.info("certificate", {{"C_best", cert.C_best}, {"K", cert.K_checked}});
    return run_kam(map, config, cert);
  };

  const Node* kam_node = nullptr;
  std::optional<Node> kn;
  if (r.has("kam")) {
    kn.emplace(r.at("kam"));
    kam_node = &*kn;
  }

  ConjugacyResult res;
  if (type == "sine_family") {
    s.keys({"type", "eps", "target_rho", "match_tol"});
    const double eps = s.at("eps").number();
    if (!(std::abs(eps) < 1.0)) s.at("eps").fail("|eps| must be < 1");
    const double target = s.at("target_rho").number();
    const double tol = s.has("match_tol") ? s.at("match_tol").positive() : 2e-6;
    const auto family = sine_family(eps);
    const double c = match_rotation_parameter(family, target, tol);
    const TorusMap map = family.torus_map_at(c, target);
    KamConfig config = default_kam_config(map);
    config.adjust_translation = true;
    res = finish(map, config, r.has("nu") ? r.at("nu").positive() : 1.0, kam_node);
    parameter = c + res.translation;
  } else if (type == "torus_map") {
    s.keys({"type", "mu", "p"});
    const auto mu = s.at("mu").numbers();
    if (mu.empty()) s.at("mu").fail("needs at least one frequency");
    const Node pn = s.at("p");
    if (pn.size() != mu.size()) pn.fail("needs one series per component");
    std::vector<FourierSeries> comps;
    for (std::size_t j = 0; j < pn.size(); ++j) {
      comps.push_back(parse_series(pn.at(j)));
      if (comps.back().dim() != static_cast<int>(mu.size())) {
        pn.at(j).at("dim").fail("must equal len(mu)");
      }
    }
    int order = 1;
    for (const auto& c : comps) order = std::max(order, c.order());
    for (auto& c : comps) c = c.resized(order);
    const TorusMap map{mu, FourierSeries::stack(comps)};
    const double nu = r.has("nu") ? r.at("nu").positive() : map.dim();
    res = finish(map, default_kam_config(map), nu, kam_node);
  } else if (type == "skew_product") {
    s.keys({"type", "rho", "alpha", "rho0", "fiber"});
    const double rho = s.at("rho").number();
    const auto alpha = s.at("alpha").numbers();
    CircleLift phi;
    phi.rho0 = s.number_or("rho0", rho);
    FourierSeries fiber = parse_series(s.at("fiber"));
    if (fiber.dim() != 1 + static_cast<int>(alpha.size())) {
      s.at("fiber").at("dim").fail("must equal 1 + len(alpha)");
    }
    phi.fourier = fiber;
    std::vector<FourierSeries> comps{fiber};
    for (std::size_t j = 0; j < alpha.size(); ++j) {
      comps.emplace_back(fiber.dim(), fiber.order());
    }
    std::vector<double> mu{rho};
    mu.insert(mu.end(), alpha.begin(), alpha.end());
    KamConfig config = default_kam_config(TorusMap{mu, FourierSeries::stack(comps)});
    config.adjust_translation = true;
    if (kam_node) config = parse_kam_config(*kam_node, config);
    const double nu = r.has("nu") ? r.at("nu").positive() : 0.0;
    res = conjugate_skew_product(phi, alpha, rho, config, nu);
  } else {
    s.at("type").fail("unknown system '" + type +
                      "' (sine_family, torus_map, skew_product)");
  }
  for (const auto& h : res.history) {
    ctx.diag.info("stage", {{"stage", h.stage}, {"residual", h.residual},
                            {"mean_abs", h.mean_abs}});
  }
  write_kam(ctx.out, res, parameter);
}

struct SweepPoint {
  std::vector<double> params;
  double value = std::nan("");
  double lo = std::nan("");
  double hi = std::nan("");
  std::string status = "ok";
};

void cmd_sweep(Context& ctx) {
  const Node& r = ctx.root;
  r.keys({"command", "map", "axes", "n"});
  const Node base = r.at("map");
  const std::string family = base.at("family").str();
  static const std::map<std::string, std::vector<std::string>> kParams = {
      {"rotation", {"rho"}},
      {"arnold", {"omega", "eps"}},
      {"conjugated_rotation", {"rho", "a"}}};
  const auto it = kParams.find(family);
  if (it == kParams.end()) {
    base.at("family").fail("sweeps support rotation, arnold and "
                           "conjugated_rotation");
  }
  const Node axes = r.at("axes");
  if (axes.size() < 1 || axes.size() > 2) axes.fail("needs one or two axes");
  struct Axis {
    std::string name;
    double lo, hi;
    std::uint64_t count;
  };
  std::vector<Axis> ax;
  for (std::size_t i = 0; i < axes.size(); ++i) {
    const Node a = axes.at(i);
    a.keys({"name", "lo", "hi", "count"});
    Axis x{a.at("name").str(), a.at("lo").number(), a.at("hi").number(),
           a.at("count").count()};
    if (std::find(it->second.begin(), it->second.end(), x.name) ==
        it->second.end()) {
      a.at("name").fail("'" + x.name + "' is not a parameter of " + family);
    }
    if (!(x.lo < x.hi)) a.fail("needs lo < hi");
    if (x.count < 2) a.at("count").fail("must be at least 2");
    if (i == 1 && x.name == ax[0].name) a.at("name").fail("axes must differ");
    ax.push_back(x);
  }
  // Fixed parameters come from the map object; axes override them.
  std::map<std::string, double> fixed;
  for (const auto& [k, v] : base.raw().items()) {
    if (k == "family") continue;
    if (std::find(it->second.begin(), it->second.end(), k) == it->second.end()) {
      base.at(k).fail("unknown field");
    }
    fixed[k] = base.at(k).number();
  }
  for (const auto& p : it->second) {
    const bool swept = std::any_of(ax.begin(), ax.end(),
                                   [&](const Axis& a) { return a.name == p; });
    if (!swept && !fixed.count(p)) base.at(p);  // throws: missing
  }
  const auto n = r.at("n").count();
  if (n < 2) r.at("n").fail("must be at least 2");
  const std::uint64_t count2 = ax.size() == 2 ? ax[1].count : 1;
  const std::uint64_t total = ax[0].count * count2;
  if (total > 100000000ULL) axes.fail("too many grid points");

  auto coord = [](const Axis& a, std::uint64_t i) {
    return a.lo + (a.hi - a.lo) * static_cast<double>(i) /
                      static_cast<double>(a.count - 1);
  };
  std::vector<SweepPoint> points(total);
  parallel_for(total, ctx.options.jobs, [&](std::size_t idx) {
    SweepPoint& pt = points[idx];
    std::map<std::string, double> params = fixed;
    const std::uint64_t i = idx / count2, j = idx % count2;
    params[ax[0].name] = coord(ax[0], i);
    pt.params.push_back(params[ax[0].name]);
    if (ax.size() == 2) {
      params[ax[1].name] = coord(ax[1], j);
      pt.params.push_back(params[ax[1].name]);
    }
    try {
      CircleLift lift;
      if (family == "rotation") {
        lift = pure_rotation(params["rho"]);
      } else if (family == "arnold") {
        lift = make_arnold_family(params["omega"], params["eps"]);
      } else {
        if (!(std::abs(params["a"]) < 1.0)) {
          throw Error(ErrorKind::kValidation, "|a| must be < 1");
        }
        lift = conjugated_rotation(params["rho"], params["a"]);
      }
      const auto e = deterministic_enclosure(lift, n);
      pt.value = e.value;
      pt.lo = e.enclosure->first;
      pt.hi = e.enclosure->second;
    } catch (const Error& e) {
      pt.status = std::string("error:") + to_string(e.kind());
    } catch (const std::exception&) {
      pt.status = "error:internal";
    }
  });

  std::vector<std::string> cols{"i"};
  if (ax.size() == 2) cols.push_back("j");
  for (const auto& a : ax) cols.push_back(a.name);
  for (const char* c : {"value", "enclosure_lo", "enclosure_hi", "status"}) {
    cols.push_back(c);
  }
  ctx.out.section("sweep", cols);
  for (std::uint64_t idx = 0; idx < total; ++idx) {
    const SweepPoint& pt = points[idx];
    std::vector<Cell> row{static_cast<std::int64_t>(idx / count2)};
    if (ax.size() == 2) row.push_back(static_cast<std::int64_t>(idx % count2));
    for (double p : pt.params) row.push_back(p);
    const bool ok = pt.status == "ok";
    row.push_back(ok ? Cell(pt.value) : Cell(std::monostate{}));
    row.push_back(ok ? Cell(pt.lo) : Cell(std::monostate{}));
    row.push_back(ok ? Cell(pt.hi) : Cell(std::monostate{}));
    row.push_back(pt.status);
    ctx.out.row(row);
  }
}

}  // namespace

OutputFormat parse_output_format(std::string_view name) {
  if (name == "csv") return OutputFormat::kCsv;
  if (name == "jsonl" || name == "json-lines") return OutputFormat::kJsonLines;
  throw Error(ErrorKind::kValidation,
              "unknown output format '" + std::string(name) + "' (csv, jsonl)");
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfiguration:
    case ErrorKind::kValidation:
    case ErrorKind::kDegenerateInput:
    case ErrorKind::kUnsupported:
    case ErrorKind::kLookup:
      return 2;
    case ErrorKind::kEvaluation:
    case ErrorKind::kUnsolvable:
    case ErrorKind::kResonance:
    case ErrorKind::kInversion:
    case ErrorKind::kDivergence:
      return 3;
    case ErrorKind::kBudgetExceeded:
      return 4;
  }
  return 1;
}

int run_experiment(const json& config, const RunOptions& options,
                   std::ostream& out, std::ostream& diag) {
  Diagnostics d(diag, options.verbose);
  try {
    const Node root(config, "$");
    if (!config.is_object()) root.fail("config must be an object");
    const std::string command = root.at("command").str();
    using Handler = void (*)(Context&);
    static const std::map<std::string, Handler> kCommands = {
        {"rotno-map", cmd_rotno_map}, {"rotno-ode", cmd_rotno_ode},
        {"compose", cmd_compose},     {"kam", cmd_kam},
        {"dioph", cmd_dioph},         {"sweep", cmd_sweep}};
    const auto it = kCommands.find(command);
    if (it == kCommands.end()) {
      root.at("command").fail("unknown command '" + command + "'");
    }
    // Results are buffered so a failed run leaves no partial table behind.
    std::ostringstream buffer;
    ResultWriter writer(buffer, options.format, command);
    Context ctx{root, options, writer, d};
    d.info("start", {{"command", command}});
    it->second(ctx);
    out << buffer.str();
    out.flush();
    d.info("done", {{"command", command}});
    return 0;
  } catch (const ConfigError& e) {
    d.error(e.kind(), e.what(), {{"path", e.path()}});
    return 2;
  } catch (const ResonanceError& e) {
    d.error(e.kind(), e.what(), {{"mode", e.mode()}});
    return exit_code_for(e.kind());
  } catch (const DivergenceError& e) {
    d.error(e.kind(), e.what(),
            {{"stage", e.stage()}, {"residuals", e.residuals()}});
    return exit_code_for(e.kind());
  } catch (const BudgetExceededError& e) {
    d.error(e.kind(), e.what(), {{"largest_feasible", e.largest_completed()}});
    return exit_code_for(e.kind());
  } catch (const Error& e) {
    d.error(e.kind(), e.what());
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    OrderedJson line{{"level", "error"}, {"kind", "internal"},
                     {"message", e.what()}};
    diag << line.dump() << "\n";
    return 1;
  }
}

int run_experiment_text(std::string_view config_text, const RunOptions& options,
                        std::ostream& out, std::ostream& diag) {
  json config;
  try {
    config = json::parse(config_text.begin(), config_text.end());
  } catch (const json::parse_error& e) {
    OrderedJson line{{"level", "error"},
                     {"kind", "validation"},
                     {"path", "$"},
                     {"message", std::string("config is not valid JSON: ") +
                                     e.what()}};
    diag << line.dump() << "\n";
    return 2;
  }
  return run_experiment(config, options, out, diag);
}

}  // namespace rotkam
