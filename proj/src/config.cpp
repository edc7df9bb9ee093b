// Copyright 2026 The tvlr Authors
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

#include "tvlr/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "tvlr/errors.hpp"

namespace tvlr {

using nlohmann::json;

namespace {

// Typed access to one JSON object that remembers its dotted path and
// rejects keys nobody asked for.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("", "expected an object");
  }

  ~Section() = default;

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number()) fail(key, "expected a number");
    return v.get<double>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
  }

  MatXd matrix(const std::string& key) {
    seen_.insert(key);
    return to_matrix(j_.at(key), key);
  }

  std::pair<double, double> interval(const std::string& key) {
    seen_.insert(key);
    const json& v = j_.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      fail(key, "expected [start, end]");
    }
    const double a = v[0].get<double>();
    const double b = v[1].get<double>();
    if (!(b > a)) fail(key, "interval end must exceed start");
    return {a, b};
  }

  Section child(const std::string& key) {
    seen_.insert(key);
    return Section(j_.at(key), key_path(key));
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) fail(key, "unknown key");
    }
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    const std::string where = key.empty() ? (path_.empty() ? "<root>" : path_) : key_path(key);
    throw ConfigError("config key '" + where + "': " + what);
  }

  std::string key_path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  // Vectors become columns; nested arrays are read row-major.
  MatXd to_matrix(const json& v, const std::string& key) const {
    if (v.is_number()) return MatXd::Constant(1, 1, v.get<double>());
    if (!v.is_array() || v.empty()) fail(key, "expected a number, vector or matrix");
    if (v[0].is_number()) {
      MatXd out(static_cast<Eigen::Index>(v.size()), 1);
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) fail(key, "vector entries must be numbers");
        out(static_cast<Eigen::Index>(i), 0) = v[i].get<double>();
      }
      return out;
    }
    const std::size_t cols = v[0].is_array() ? v[0].size() : 0;
    if (cols == 0) fail(key, "matrix rows must be non-empty arrays");
    MatXd out(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_array() || v[i].size() != cols) fail(key, "matrix rows must have equal length");
      for (std::size_t k = 0; k < cols; ++k) {
        if (!v[i][k].is_number()) fail(key, "matrix entries must be numbers");
        out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = v[i][k].get<double>();
      }
    }
    return out;
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

json matrix_json(const MatXd& m) {
  if (m.cols() == 1) {
    json v = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) v.push_back(m(i, 0));
    return v;
  }
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(row);
  }
  return rows;
}

void parse_scenario(Section& root, RunConfig& cfg) {
  if (!root.has("scenario")) return;
  const json& v = root.raw("scenario");
  if (v.is_string()) {
    const std::string name = v.get<std::string>();
    if (name != "f16-paper") root.fail("scenario", "unknown built-in scenario '" + name + "'");
    cfg.scenario = ScenarioConfig{name, std::nullopt};
    return;
  }
  Section s = root.child("scenario");
  CustomPlant p;
  for (const char* key : {"A", "B", "Bz", "K"}) {
    if (!s.has(key)) s.fail(key, "missing");
  }
  p.A = s.matrix("A");
  p.B = s.matrix("B");
  p.Bz = s.matrix("Bz");
  p.K = s.matrix("K");
  if (s.has("Q")) p.Q = s.matrix("Q");
  if (s.has("x0")) {
    const MatXd x0 = s.matrix("x0");
    if (x0.cols() != 1) s.fail("x0", "expected a vector");
    p.x0 = x0.col(0);
  }
  s.finish();
  cfg.scenario = ScenarioConfig{"", std::move(p)};
}

void parse_uncertainty(Section& root, RunConfig& cfg) {
  if (!root.has("uncertainty")) return;
  Section s = root.child("uncertainty");
  const std::string kind = s.string("kind", "constant_paper");
  if (kind == "constant_paper") {
    cfg.uncertainty = UncertaintySpec::constant_paper();
  } else if (kind == "constant") {
    if (!s.has("theta_star")) s.fail("theta_star", "missing");
    cfg.uncertainty = UncertaintySpec::constant(s.matrix("theta_star"));
  } else if (kind == "sinusoid") {
    cfg.uncertainty = UncertaintySpec::sinusoid(s.number("amplitude", 0.1), s.number("frequency", 0.2));
    if (s.has("theta_star")) cfg.uncertainty.theta_star = s.matrix("theta_star");
  } else {
    s.fail("kind", "unknown uncertainty kind '" + kind + "'");
  }
  s.finish();
}

void parse_command(Section& root, RunConfig& cfg) {
  if (!root.has("command")) return;
  Section s = root.child("command");
  const std::string kind = s.string("kind", "step_train");
  if (kind == "zero") {
    cfg.command = CommandSpec::zero();
  } else if (kind == "constant") {
    cfg.command = CommandSpec::constant(s.number("value", 1.0));
  } else if (kind == "step_train") {
    cfg.command = CommandSpec::step_train(s.number("period", 10.0), s.number("amplitude", 5.0));
    if (!(cfg.command.period > 0)) s.fail("period", "must be positive");
  } else if (kind == "sinusoid") {
    cfg.command = CommandSpec::sinusoid(s.number("amplitude", 1.0), s.number("frequency", 0.1));
  } else {
    s.fail("kind", "unknown command kind '" + kind + "'");
  }
  s.finish();
}

void parse_laws(Section& root, RunConfig& cfg) {
  const bool has_law = root.has("law");
  const bool has_laws = root.has("laws");
  if (has_law && has_laws) root.fail("laws", "give either 'law' or 'laws'");
  try {
    if (has_law) {
      cfg.laws = {parse_law_variant(root.string("law", ""))};
    } else if (has_laws) {
      const json& v = root.raw("laws");
      if (!v.is_array() || v.empty()) root.fail("laws", "expected a non-empty list of law names");
      cfg.laws.clear();
      for (const auto& item : v) {
        if (!item.is_string()) root.fail("laws", "law names must be strings");
        cfg.laws.push_back(parse_law_variant(item.get<std::string>()));
      }
    }
  } catch (const ConfigError& e) {
    root.fail(has_law ? "law" : "laws", e.what());
  }
}

void parse_gains(Section& root, RunConfig& cfg) {
  GainConfig& g = cfg.gains;
  if (root.has("gains")) {
    Section s = root.child("gains");
    g.lambda_gamma = s.number("lambda_gamma", g.lambda_gamma);
    g.kappa = s.number("kappa", g.kappa);
    g.lambda_omega = s.number("lambda_omega", g.lambda_omega);
    if (s.has("gamma0")) {
      const json& v = s.raw("gamma0");
      if (v.is_number()) {
        g.gamma0_scale = v.get<double>();
      } else {
        g.gamma0 = s.matrix("gamma0");
      }
    }
    s.finish();
    if (!(g.lambda_gamma > 0)) s.fail("lambda_gamma", "must be positive");
    if (!(g.lambda_omega > 0)) s.fail("lambda_omega", "must be positive");
    if (!(g.kappa > 0)) s.fail("kappa", "must be positive");
    if (g.gamma0.size() == 0 && !(g.gamma0_scale > 0)) s.fail("gamma0", "must be positive");
  }
  if (root.has("theta_projection")) {
    Section s = root.child("theta_projection");
    g.theta_cap = s.number("cap", g.theta_cap);
    g.theta_margin = s.number("margin", g.theta_margin);
    s.finish();
    if (!(g.theta_cap >= 0)) s.fail("cap", "must be non-negative");
    if (!(g.theta_margin > 0)) s.fail("margin", "must be positive");
  }
  if (root.has("gamma_projection")) {
    Section s = root.child("gamma_projection");
    g.gamma_max = s.number("gamma_max", g.gamma_max);
    g.gamma_margin = s.number("margin", g.gamma_margin);
    s.finish();
    if (!(g.gamma_margin > 0)) s.fail("margin", "must be positive");
    if (!(g.gamma_max > g.gamma_margin)) s.fail("gamma_max", "must exceed the margin");
  }
  if (!(g.kappa > 1.0 / g.gamma_max)) root.fail("gains", "kappa must exceed 1/gamma_max");
  if (root.has("excitation")) {
    Section s = root.child("excitation");
    g.k_omega = s.number("k_omega", g.k_omega);
    g.rho_omega = s.number("rho_omega", g.rho_omega);
    g.rho_gamma = s.number("rho_gamma", g.rho_gamma);
    s.finish();
    if (!(g.k_omega > 1)) s.fail("k_omega", "must exceed 1");
    if (!(g.rho_omega > 0 && g.rho_omega < 1)) s.fail("rho_omega", "must lie in (0, 1)");
    if (!(g.rho_gamma > 0 && g.rho_gamma < 1)) s.fail("rho_gamma", "must lie in (0, 1)");
  }
}

void parse_sim(Section& root, RunConfig& cfg) {
  if (!root.has("sim")) return;
  Section s = root.child("sim");
  cfg.sim.dt = s.number("dt", cfg.sim.dt);
  cfg.sim.t_end = s.number("t_end", cfg.sim.t_end);
  const double stride = s.number("record_stride", static_cast<double>(cfg.sim.record_stride));
  if (!(stride >= 1) || stride != std::floor(stride)) s.fail("record_stride", "must be a positive integer");
  cfg.sim.record_stride = static_cast<std::size_t>(stride);
  try {
    cfg.sim.integrator = parse_integrator(s.string("integrator", to_string(cfg.sim.integrator)));
    cfg.sim.validate();
  } catch (const ConfigError& e) {
    s.fail("", e.what());
  }
  s.finish();
}

void parse_analysis(Section& root, RunConfig& cfg) {
  if (!root.has("analysis")) return;
  Section s = root.child("analysis");
  if (s.has("envelope_window")) cfg.analysis.envelope_window = s.interval("envelope_window");
  if (s.has("fe_window")) cfg.analysis.fe_window = s.interval("fe_window");
  s.finish();
}

void parse_output(Section& root, RunConfig& cfg) {
  if (!root.has("output")) return;
  Section s = root.child("output");
  cfg.output.trajectory = s.string("trajectory", cfg.output.trajectory);
  cfg.output.bounds = s.string("bounds", cfg.output.bounds);
  cfg.output.compare = s.string("compare", cfg.output.compare);
  s.finish();
}

}  // namespace

RunConfig builtin_config(const std::string& name) {
  if (name != "f16-paper") throw ConfigError("unknown built-in config '" + name + "'");
  return RunConfig{};
}

RunConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1;
    std::size_t column = 1;
    for (std::size_t k = 0; k + 1 < e.byte && k < text.size(); ++k) {
      if (text[k] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ConfigError("config syntax error at line " + std::to_string(line) + ", column " +
                      std::to_string(column) + ": " + e.what());
  }
  RunConfig cfg;
  Section root(doc, "");
  parse_scenario(root, cfg);
  parse_uncertainty(root, cfg);
  parse_command(root, cfg);
  parse_laws(root, cfg);
  parse_gains(root, cfg);
  parse_sim(root, cfg);
  parse_analysis(root, cfg);
  parse_output(root, cfg);
  root.finish();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const RunConfig& c) {
  json doc;
  if (c.scenario.custom) {
    const CustomPlant& p = *c.scenario.custom;
    json s{{"A", matrix_json(p.A)}, {"B", matrix_json(p.B)}, {"Bz", matrix_json(p.Bz)},
           {"K", matrix_json(p.K)}};
    if (p.Q.size() > 0) s["Q"] = matrix_json(p.Q);
    if (p.x0.size() > 0) s["x0"] = matrix_json(p.x0);
    doc["scenario"] = s;
  } else {
    doc["scenario"] = c.scenario.builtin;
  }

  switch (c.uncertainty.kind) {
    case UncertaintySpec::Kind::kConstantPaper:
      doc["uncertainty"] = {{"kind", "constant_paper"}};
      break;
    case UncertaintySpec::Kind::kConstant:
      doc["uncertainty"] = {{"kind", "constant"}, {"theta_star", matrix_json(c.uncertainty.theta_star)}};
      break;
    case UncertaintySpec::Kind::kSinusoid:
      doc["uncertainty"] = {{"kind", "sinusoid"},
                            {"amplitude", c.uncertainty.amplitude},
                            {"frequency", c.uncertainty.frequency}};
      if (c.uncertainty.theta_star.size() > 0) {
        doc["uncertainty"]["theta_star"] = matrix_json(c.uncertainty.theta_star);
      }
      break;
  }

  switch (c.command.kind) {
    case CommandSpec::Kind::kZero: doc["command"] = {{"kind", "zero"}}; break;
    case CommandSpec::Kind::kConstant:
      doc["command"] = {{"kind", "constant"}, {"value", c.command.value}};
      break;
    case CommandSpec::Kind::kStepTrain:
      doc["command"] = {{"kind", "step_train"}, {"period", c.command.period},
                        {"amplitude", c.command.amplitude}};
      break;
    case CommandSpec::Kind::kSinusoid:
      doc["command"] = {{"kind", "sinusoid"}, {"amplitude", c.command.amplitude},
                        {"frequency", c.command.frequency}};
      break;
  }

  json laws = json::array();
  for (LawVariant v : c.laws) laws.push_back(to_string(v));
  doc["laws"] = laws;

  const GainConfig& g = c.gains;
  doc["gains"] = {{"lambda_gamma", g.lambda_gamma}, {"kappa", g.kappa},
                  {"lambda_omega", g.lambda_omega}};
  doc["gains"]["gamma0"] = g.gamma0.size() > 0 ? matrix_json(g.gamma0) : json(g.gamma0_scale);
  doc["theta_projection"] = {{"cap", g.theta_cap}, {"margin", g.theta_margin}};
  doc["gamma_projection"] = {{"gamma_max", g.gamma_max}, {"margin", g.gamma_margin}};
  doc["excitation"] = {{"k_omega", g.k_omega}, {"rho_omega", g.rho_omega},
                       {"rho_gamma", g.rho_gamma}};
  doc["sim"] = {{"dt", c.sim.dt}, {"t_end", c.sim.t_end},
                {"record_stride", c.sim.record_stride},
                {"integrator", to_string(c.sim.integrator)}};
  json analysis = json::object();
  if (c.analysis.envelope_window) {
    analysis["envelope_window"] = {c.analysis.envelope_window->first, c.analysis.envelope_window->second};
  }
  if (c.analysis.fe_window) {
    analysis["fe_window"] = {c.analysis.fe_window->first, c.analysis.fe_window->second};
  }
  doc["analysis"] = analysis;
  doc["output"] = {{"trajectory", c.output.trajectory}, {"bounds", c.output.bounds},
                   {"compare", c.output.compare}};
  return doc.dump(2) + "\n";
}

ErrorModelScenario build_scenario(const RunConfig& c) {
  try {
    if (!c.scenario.custom) return make_f16_scenario(c.uncertainty, c.command);
    const CustomPlant& p = *c.scenario.custom;
    const Eigen::Index n = p.A.rows();
    const MatXd Q = p.Q.size() > 0 ? p.Q : MatXd::Identity(n, n);
    return make_scenario(PlantModel{p.A, p.B, p.Bz}, p.K, Q, c.uncertainty, c.command, p.x0);
  } catch (const PreconditionError& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  } catch (const CertificateError& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }
}

EstimatorLaw build_law(const RunConfig& c, LawVariant variant, Eigen::Index regressor_dim,
                       Eigen::Index param_cols) {
  const GainConfig& g = c.gains;
  ParamMatrix theta0{MatXd::Zero(regressor_dim, param_cols),
                     ProjFamily<double>(static_cast<std::size_t>(param_cols),
                                        ConvexBound<double>(g.theta_cap, g.theta_margin))};
  MatXd gamma0 = g.gamma0.size() > 0 ? g.gamma0
                                     : MatXd(MatXd::Identity(regressor_dim, regressor_dim) * g.gamma0_scale);
  if (gamma0.rows() != regressor_dim || gamma0.cols() != regressor_dim) {
    throw ConfigError("config key 'gains.gamma0': must be " + std::to_string(regressor_dim) + "x" +
                      std::to_string(regressor_dim));
  }
  if ((gamma0 - gamma0.transpose()).norm() > 0) {
    throw ConfigError("config key 'gains.gamma0': must be symmetric");
  }
  LawGains gains;
  gains.lambda_gamma = g.lambda_gamma;
  gains.kappa = g.kappa;
  gains.lambda_omega = g.lambda_omega;
  gains.gamma_bound = ConvexBound<double>(g.gamma_max - g.gamma_margin, g.gamma_margin,
                                          NormKind::kFrobenius);
  try {
    return make_law(variant, std::move(theta0), SymMat<double>::from_upper(gamma0), gains);
  } catch (const PreconditionError& e) {
    throw ConfigError(std::string("gains: ") + e.what());
  }
}

ExcitationConfig excitation_config(const RunConfig& c) {
  ExcitationConfig e;
  e.kappa = c.gains.kappa;
  e.gamma_max = c.gains.gamma_max;
  e.k_omega = c.gains.k_omega;
  e.rho_omega = c.gains.rho_omega;
  e.lambda_omega = c.gains.lambda_omega;
  return e;
}

}  // namespace tvlr
