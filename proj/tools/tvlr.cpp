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

// tvlr: simulate, compare and excite subcommands.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tvlr/commands.hpp"
#include "tvlr/errors.hpp"

namespace {

struct Common {
  std::string config_path;
  std::string builtin = "f16-paper";
  std::vector<std::string> laws;
  std::string output_dir;
  std::optional<double> dt;
  std::optional<double> t_end;
  std::optional<std::string> trajectory;
  std::optional<std::string> bounds;
  std::optional<std::string> compare;
};

void add_common(CLI::App* app, Common& c, bool many_laws) {
  app->add_option("-c,--config", c.config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app->add_option("--builtin", c.builtin, "Built-in configuration when no --config is given")
      ->capture_default_str();
  app->add_option("--law", c.laws,
                  many_laws ? "Laws to compare: static, tv_projected, tv_forgetting (repeatable)"
                            : "Estimator law: static, tv_projected, tv_forgetting");
  app->add_option("--output-dir", c.output_dir, "Directory for relative output paths");
  app->add_option("--dt", c.dt, "Integration step [s] (chosen default 1e-3)");
  app->add_option("--t-end", c.t_end, "Horizon [s] (chosen default 60)");
}

tvlr::RunConfig resolve(const Common& c) {
  tvlr::RunConfig cfg = c.config_path.empty() ? tvlr::builtin_config(c.builtin)
                                              : tvlr::load_config(c.config_path);
  if (!c.laws.empty()) {
    cfg.laws.clear();
    for (const auto& name : c.laws) cfg.laws.push_back(tvlr::parse_law_variant(name));
  }
  if (c.dt) cfg.sim.dt = *c.dt;
  if (c.t_end) cfg.sim.t_end = *c.t_end;
  if (c.trajectory) cfg.output.trajectory = *c.trajectory;
  if (c.bounds) cfg.output.bounds = *c.bounds;
  if (c.compare) cfg.output.compare = *c.compare;
  cfg.sim.validate();
  return cfg;
}

std::pair<double, double> parse_window(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw tvlr::ConfigError("--window expects t1,t2");
  try {
    const double a = std::stod(text.substr(0, comma));
    const double b = std::stod(text.substr(comma + 1));
    if (!(b > a)) throw tvlr::ConfigError("--window " + text + ": t2 must exceed t1");
    return {a, b};
  } catch (const std::logic_error&) {
    throw tvlr::ConfigError("--window " + text + ": expected two numbers");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Adaptive control with a time-varying learning-rate matrix.\n"
      "Chosen defaults (override in the config file): theta projection cap 1.0, margin 0.1;\n"
      "Gamma projection Gamma_max 100 (Frobenius), margin 10; k_Omega 2, rho_Omega 0.5,\n"
      "rho_Gamma 0.9; dt 1e-3 s; horizon 60 s; command step train of period 10 s, amplitude 5."};
  app.require_subcommand(1);

  Common sim_opts;
  CLI::App* sim = app.add_subcommand("simulate", "Run one law; write trajectory and bound-report CSVs");
  add_common(sim, sim_opts, false);
  sim->add_option("--trajectory", sim_opts.trajectory, "Trajectory CSV path");
  sim->add_option("--bounds", sim_opts.bounds, "Bound-report CSV path");

  Common cmp_opts;
  CLI::App* cmp = app.add_subcommand("compare", "Run several laws on one scenario; write a wide CSV");
  add_common(cmp, cmp_opts, true);
  cmp->add_option("--out", cmp_opts.compare, "Comparison CSV path");

  Common exc_opts;
  tvlr::ExciteOptions excite;
  std::string trace_path;
  std::vector<std::string> windows;
  std::string columns;
  double pe_window = 0;
  double pe_stride = 0;
  std::string excite_csv;
  CLI::App* exc = app.add_subcommand("excite", "Finite/persistent excitation report for a regressor trace");
  add_common(exc, exc_opts, false);
  exc->add_option("--trace", trace_path, "CSV with a time column and regressor columns")
      ->check(CLI::ExistingFile);
  exc->add_option("--columns", columns, "Comma-separated regressor column names");
  exc->add_option("--window", windows, "Finite-excitation window t1,t2 (repeatable)");
  CLI::Option* pe_opt = exc->add_option("--pe", pe_window, "Persistent-excitation window length T [s]");
  CLI::Option* stride_opt = exc->add_option("--stride", pe_stride, "Spacing of PE window starts [s]");
  exc->add_option("--csv", excite_csv, "Write the report as CSV");

  CLI11_PARSE(app, argc, argv);

  tvlr::CommandIo io{std::cout, std::cerr, ""};
  try {
    if (sim->parsed()) {
      const tvlr::RunConfig cfg = resolve(sim_opts);
      io.output_dir = sim_opts.output_dir;
      return tvlr::cmd_simulate(cfg, io);
    }
    if (cmp->parsed()) {
      const tvlr::RunConfig cfg = resolve(cmp_opts);
      io.output_dir = cmp_opts.output_dir;
      return tvlr::cmd_compare(cfg, io);
    }
    const tvlr::RunConfig cfg = resolve(exc_opts);
    io.output_dir = exc_opts.output_dir;
    if (!trace_path.empty()) excite.trace_path = trace_path;
    if (!columns.empty()) {
      std::stringstream ss(columns);
      std::string name;
      while (std::getline(ss, name, ',')) excite.columns.push_back(name);
    }
    for (const auto& w : windows) excite.windows.push_back(parse_window(w));
    if (*pe_opt) excite.pe_window = pe_window;
    if (*stride_opt) excite.pe_stride = pe_stride;
    if (!excite_csv.empty()) excite.csv_path = excite_csv;
    return tvlr::cmd_excite(cfg, excite, io);
  } catch (const tvlr::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return tvlr::exit_code::kConfig;
  } catch (const tvlr::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return tvlr::exit_code::kIo;
  }
}
