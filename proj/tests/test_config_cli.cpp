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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "tvlr/commands.hpp"
#include "tvlr/config.hpp"
#include "tvlr/errors.hpp"

using namespace tvlr;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path_ = fs::temp_directory_path() / (std::string("tvlr_") + info->test_suite_name() + "_" + info->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string str() const { return path_.string(); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

RunConfig short_run(const std::string& extra = "") {
  return parse_config(R"({"sim": {"dt": 0.001, "t_end": 2, "record_stride": 10})" + extra + "}");
}

// The excitation report mixes a text column with numbers.
std::vector<std::vector<std::string>> text_rows(const std::string& path) {
  std::ifstream in(path);
  std::vector<std::vector<std::string>> out;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    out.push_back(cells);
  }
  return out;
}

double cell(const std::vector<std::vector<std::string>>& rows, std::size_t r, const std::string& name) {
  for (std::size_t c = 0; c < rows[0].size(); ++c) {
    if (rows[0][c] == name) return std::stod(rows[r][c]);
  }
  ADD_FAILURE() << "no column " << name;
  return std::nan("");
}

CsvTable table(const std::string& path) {
  std::ifstream in(path);
  return read_csv(in, path);
}

std::size_t column(const CsvTable& t, const std::string& name) {
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    if (t.header[c] == name) return c;
  }
  ADD_FAILURE() << "no column " << name;
  return 0;
}

}  // namespace

TEST(Config, BuiltinMatchesEmptyDocument) {
  const RunConfig a = builtin_config("f16-paper");
  EXPECT_EQ(a.gains.lambda_gamma, 0.5);
  EXPECT_EQ(a.gains.kappa, 0.5);
  EXPECT_EQ(a.gains.lambda_omega, 10.0);
  EXPECT_EQ(a.gains.gamma0_scale, 10.0);
  EXPECT_EQ(a.sim.dt, 1e-3);
  EXPECT_EQ(a.sim.t_end, 60.0);
  EXPECT_EQ(serialize_config(a), serialize_config(parse_config("{}")));
  EXPECT_THROW(builtin_config("nope"), ConfigError);
}

TEST(Config, RoundTrip) {
  const std::string text = R"({
    "scenario": {"A": [[-1, 0.5], [0, -2]], "B": [[1], [0.5]], "Bz": [0, 1], "K": [[0.1], [0.2]],
                 "x0": [0.1, -0.2]},
    "uncertainty": {"kind": "sinusoid", "amplitude": 0.05, "frequency": 0.3, "theta_star": [0.2, -0.1]},
    "command": {"kind": "sinusoid", "amplitude": 2, "frequency": 0.25},
    "laws": ["static", "tv_forgetting"],
    "gains": {"lambda_gamma": 0.7, "kappa": 0.4, "lambda_omega": 5, "gamma0": [[3, 0.5], [0.5, 2]]},
    "theta_projection": {"cap": 2, "margin": 0.2},
    "gamma_projection": {"gamma_max": 50, "margin": 5},
    "excitation": {"k_omega": 3, "rho_omega": 0.4, "rho_gamma": 0.8},
    "sim": {"dt": 0.002, "t_end": 12.5, "record_stride": 4, "integrator": "euler"},
    "analysis": {"envelope_window": [1, 9], "fe_window": [0, 5]},
    "output": {"trajectory": "a.csv", "bounds": "b.csv", "compare": "c.csv"}
  })";
  const RunConfig first = parse_config(text);
  const std::string once = serialize_config(first);
  const RunConfig second = parse_config(once);
  EXPECT_EQ(serialize_config(second), once);

  EXPECT_EQ(second.laws, (std::vector<LawVariant>{LawVariant::kStatic, LawVariant::kTvForgetting}));
  EXPECT_EQ(second.gains.gamma0(0, 1), 0.5);
  EXPECT_EQ(second.sim.integrator, Integrator::kEuler);
  ASSERT_TRUE(second.scenario.custom);
  EXPECT_EQ(second.scenario.custom->A(0, 1), 0.5);
  EXPECT_EQ(second.scenario.custom->x0(1), -0.2);
  ASSERT_TRUE(second.analysis.fe_window);
  EXPECT_EQ(second.analysis.fe_window->second, 5.0);
  EXPECT_EQ(second.output.compare, "c.csv");
}

TEST(Config, UnknownKeyNamesPath) {
  EXPECT_NE(config_error(R"({"gains": {"lamda_gamma": 1}})").find("gains.lamda_gamma"), std::string::npos);
  EXPECT_NE(config_error(R"({"simulation": {}})").find("simulation"), std::string::npos);
}

TEST(Config, SyntaxErrorHasLineAndColumn) {
  const std::string msg = config_error("{\n  \"sim\": {\n    \"dt\": ,\n  }\n}");
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
  EXPECT_NE(msg.find("column"), std::string::npos) << msg;
}

TEST(Config, SemanticErrors) {
  EXPECT_NE(config_error(R"({"law": "static", "laws": ["static"]})").find("laws"), std::string::npos);
  EXPECT_NE(config_error(R"({"law": "mrac"})").find("unknown law"), std::string::npos);
  EXPECT_NE(config_error(R"({"gains": {"kappa": 0.005}})").find("kappa"), std::string::npos);
  EXPECT_NE(config_error(R"({"sim": {"dt": 0.05}})").find("sim.dt"), std::string::npos);
  EXPECT_NE(config_error(R"({"sim": {"dt": "fast"}})").find("sim.dt"), std::string::npos);
  EXPECT_NE(config_error(R"({"command": {"kind": "ramp"}})").find("command.kind"), std::string::npos);
  EXPECT_NE(config_error(R"({"scenario": {"A": [[1]]}})").find("scenario.B"), std::string::npos);
  EXPECT_FALSE(config_error(R"({"scenario": "f15"})").empty());
}

TEST(Config, NonHurwitzScenarioIsConfigError) {
  const RunConfig c = parse_config(R"({"scenario": {"A": [[1]], "B": [[1]], "Bz": [[1]], "K": [[0]]},
                                       "uncertainty": {"kind": "constant", "theta_star": [[0]]}})");
  EXPECT_THROW(build_scenario(c), ConfigError);
}

TEST(Cli, SimulateZeroCommandGivesZeroError) {
  TempDir dir;
  std::ostringstream out, err;
  const RunConfig c = short_run(R"(, "command": {"kind": "zero"})");
  ASSERT_EQ(cmd_simulate(c, {out, err, dir.str()}), exit_code::kOk) << err.str();
  const CsvTable t = table(dir.file("trajectory.csv"));
  EXPECT_EQ(t.rows.size(), 201u);
  // theta~ = -theta* still weighs in V; only the tracking error vanishes.
  for (const char* name : {"e1", "e2", "e3", "norm_e"}) {
    const std::size_t c_idx = column(t, name);
    for (const auto& row : t.rows) ASSERT_EQ(row[c_idx], 0.0) << name;
  }
  const std::string bounds = slurp(dir.file("bounds.csv"));
  EXPECT_EQ(bounds.substr(0, bounds.find('\n')),
            "t,eta,upsilon,eta0,upsilon_max,in_D,in_Dmax,envelope,envelope_ok,"
            "vdot_term_Q,vdot_term_thetadot,vdot_term_excitation");
}

TEST(Cli, TrajectoryHeader) {
  TempDir dir;
  std::ostringstream out, err;
  ASSERT_EQ(cmd_simulate(short_run(), {out, err, dir.str()}), exit_code::kOk) << err.str();
  const std::string text = slurp(dir.file("trajectory.csv"));
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "t,x1,x2,x3,xhat1,xhat2,xhat3,e1,e2,e3,u,theta_1_1,theta_2_1,theta_3_1,"
            "gamma_1_1,gamma_1_2,gamma_1_3,gamma_2_2,gamma_2_3,gamma_3_3,"
            "omega_1_1,omega_1_2,omega_1_3,omega_2_2,omega_2_3,omega_3_3,rho,V,norm_e,norm_theta_tilde");
}

TEST(Cli, ExitCodes) {
  TempDir dir;
  std::ostringstream out, err;
  EXPECT_EQ(cmd_simulate(short_run(R"(, "laws": ["static", "tv_projected"])"), {out, err, dir.str()}),
            exit_code::kConfig);
  EXPECT_EQ(cmd_simulate(short_run(), {out, err, dir.file("missing/deeper")}), exit_code::kIo);

  // Euler with a large learning rate throws theta far outside its set in one step.
  const RunConfig breach = parse_config(R"({
    "scenario": {"A": [[-1]], "B": [[1]], "Bz": [[1]], "K": [[0]]},
    "uncertainty": {"kind": "constant", "theta_star": [[0.5]]},
    "command": {"kind": "constant", "value": 10},
    "gains": {"gamma0": 90},
    "theta_projection": {"cap": 0.01, "margin": 0.001},
    "sim": {"dt": 0.05, "t_end": 2, "integrator": "euler"}})");
  err.str("");
  EXPECT_EQ(cmd_simulate(breach, {out, err, dir.str()}), exit_code::kInvariant);
  EXPECT_NE(err.str().find("invariant breach"), std::string::npos) << err.str();
}

TEST(Cli, CompareAlignsLaws) {
  TempDir dir;
  std::ostringstream out, err;
  const RunConfig c = short_run(R"(, "laws": ["static", "tv_projected", "tv_forgetting"])");
  ASSERT_EQ(cmd_compare(c, {out, err, dir.str()}), exit_code::kOk) << err.str();
  const CsvTable t = table(dir.file("compare.csv"));
  EXPECT_EQ(t.rows.size(), 201u);
  for (const char* law : {"static", "tv_projected", "tv_forgetting"}) {
    for (const char* q : {"V_", "norm_e_", "norm_theta_tilde_", "norm_gamma_"}) {
      column(t, std::string(q) + law);
    }
  }
  // Each column matches the corresponding single-law run.
  const auto runs = simulate_laws(c);
  const std::size_t v_tv = column(t, "V_tv_projected");
  for (std::size_t k = 0; k < t.rows.size(); ++k) {
    ASSERT_EQ(t.rows[k][v_tv], runs[1].samples[k].V);
  }
  EXPECT_FALSE(fs::exists(dir.file("trajectory.csv")));
}

TEST(Cli, CompareSingleLawWritesSimulateOutput) {
  TempDir dir;
  std::ostringstream out, err;
  ASSERT_EQ(cmd_compare(short_run(), {out, err, dir.str()}), exit_code::kOk) << err.str();
  EXPECT_TRUE(fs::exists(dir.file("trajectory.csv")));
  EXPECT_TRUE(fs::exists(dir.file("bounds.csv")));
  EXPECT_TRUE(fs::exists(dir.file("compare.csv")));
}

TEST(Cli, ExciteSinCosTrace) {
  TempDir dir;
  {
    std::ofstream os(dir.file("trace.csv"));
    os << "time,s,c\n";
    const int n = 4000;
    for (int k = 0; k <= n; ++k) {
      const double t = 2.0 * std::numbers::pi * k / n;
      os.precision(17);
      os << t << ',' << std::sin(t) << ',' << std::cos(t) << '\n';
    }
  }
  ExciteOptions opt;
  opt.trace_path = dir.file("trace.csv");
  opt.csv_path = "excite.csv";
  std::ostringstream out, err;
  ASSERT_EQ(cmd_excite(builtin_config("f16-paper"), opt, {out, err, dir.str()}), exit_code::kOk) << err.str();
  const auto rows = text_rows(dir.file("excite.csv"));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1][0], "finite");
  EXPECT_NEAR(cell(rows, 1, "alpha"), std::numbers::pi, 1e-6);
  EXPECT_NEAR(cell(rows, 1, "T"), 2.0 * std::numbers::pi, 1e-12);
}

TEST(Cli, ExciteConstantRegressorIsNotExciting) {
  TempDir dir;
  {
    std::ofstream os(dir.file("trace.csv"));
    os << "t,a,b,c\n";
    for (int k = 0; k <= 100; ++k) os << 0.1 * k << ",1,2,3\n";
  }
  ExciteOptions opt;
  opt.trace_path = dir.file("trace.csv");
  opt.windows = {{0.0, 10.0}};
  opt.pe_window = 2.0;
  opt.csv_path = "excite.csv";
  std::ostringstream out, err;
  ASSERT_EQ(cmd_excite(builtin_config("f16-paper"), opt, {out, err, dir.str()}), exit_code::kOk) << err.str();
  const auto rows = text_rows(dir.file("excite.csv"));
  ASSERT_EQ(rows.size(), 3u);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    EXPECT_NEAR(cell(rows, r, "alpha"), 0.0, 1e-9);
    EXPECT_EQ(cell(rows, r, "meets_level"), 0.0);
  }
}

TEST(Cli, ExciteMalformedTrace) {
  TempDir dir;
  {
    std::ofstream os(dir.file("trace.csv"));
    os << "t,a\n0,1\n0.1,oops\n";
  }
  ExciteOptions opt;
  opt.trace_path = dir.file("trace.csv");
  std::ostringstream out, err;
  EXPECT_EQ(cmd_excite(builtin_config("f16-paper"), opt, {out, err, dir.str()}), exit_code::kIo);
  opt.trace_path = dir.file("absent.csv");
  EXPECT_EQ(cmd_excite(builtin_config("f16-paper"), opt, {out, err, dir.str()}), exit_code::kIo);
}

TEST(Csv, TraceColumnsSelectable) {
  std::istringstream is("t,a,b\n0,1,2\n1,3,4\n");
  const CsvTable t = read_csv(is, "inline");
  const RegressorTrace tr = trace_from_csv(t, {"b"});
  EXPECT_EQ(tr.dim(), 1);
  EXPECT_EQ(tr.phi(1, 0), 4.0);
  EXPECT_THROW(trace_from_csv(t, {"z"}), std::exception);
}
