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

#include "tvlr/commands.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>

#include "tvlr/errors.hpp"
#include "tvlr/simulate.hpp"

namespace tvlr {

namespace {

std::string output_path(const CommandIo& io, const std::string& path) {
  if (io.output_dir.empty() || std::filesystem::path(path).is_absolute()) return path;
  return (std::filesystem::path(io.output_dir) / path).string();
}

template <typename Writer>
void write_file(const std::string& path, Writer&& writer) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  writer(os);
  os.flush();
  if (!os) throw IoError("write to '" + path + "' failed");
}

// Maps the error hierarchy onto exit codes.
template <typename Body>
int guarded(const CommandIo& io, Body&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    io.err << "error: " << e.what() << "\n";
    return exit_code::kConfig;
  } catch (const IoError& e) {
    io.err << "error: " << e.what() << "\n";
    return exit_code::kIo;
  } catch (const IntegrationError& e) {
    io.err << "invariant breach at t = " << format_number(e.time()) << " (" << e.quantity()
           << "): " << e.what() << "\n";
    return exit_code::kInvariant;
  } catch (const Error& e) {
    io.err << "error: " << e.what() << "\n";
    return exit_code::kInvariant;
  }
}

double sample_time_at_or_after(const Trajectory& traj, double t) {
  for (const auto& s : traj.samples) {
    if (s.t >= t - 1e-12) return s.t;
  }
  return traj.samples.back().t;
}

}  // namespace

std::pair<double, double> envelope_window(const RunConfig& config, const Trajectory& traj,
                                          std::ostream* notes) {
  const double t_first = traj.samples.front().t;
  const double t_last = traj.samples.back().t;
  if (config.analysis.envelope_window) {
    auto [t3, t4] = *config.analysis.envelope_window;
    if (t3 < t_first || t4 > t_last + 1e-12) {
      throw ConfigError("config key 'analysis.envelope_window': outside the simulated horizon");
    }
    return {t3, t4};
  }
  if (config.analysis.fe_window) {
    const auto [t1, t2] = *config.analysis.fe_window;
    if (t1 < t_first || t2 > t_last + 1e-12) {
      throw ConfigError("config key 'analysis.fe_window': outside the simulated horizon");
    }
    const ExcitationConfig ecfg = excitation_config(config);
    const ExcitationReport report = detect_fe(traj.regressor_trace(), t1, t2, ecfg);
    if (report.meets_assumption3) {
      PropagationTimeline tl = propagation_timeline(report, ecfg);
      const double t3 = sample_time_at_or_after(traj, tl.t3);
      double gamma_t3 = 0;
      for (const auto& s : traj.samples) {
        if (s.t == t3) gamma_t3 = s.gamma.dense().norm();
      }
      try {
        tl = propagation_timeline(report, ecfg,
                                  GammaPhaseInput{config.gains.rho_gamma, config.gains.lambda_gamma, gamma_t3});
      } catch (const PreconditionError& e) {
        if (notes) *notes << "note: no learning-rate phase (" << e.what() << ")\n";
      }
      const double t4 = tl.has_gamma_phase ? tl.t4 : t_last;
      if (t3 < t_last) return {t3, std::min(t4, t_last)};
      if (notes) *notes << "note: t3 lies beyond the horizon; checking the whole run\n";
    } else if (notes) {
      *notes << "note: window [" << format_number(t1) << ", " << format_number(t2)
             << "] has alpha = " << format_number(report.alpha) << " < alpha0 = "
             << format_number(report.alpha0) << "; checking the whole run\n";
    }
  }
  return {t_first, t_last};
}

SimulationOutput simulate_law(const RunConfig& config, LawVariant variant, std::ostream* notes) {
  const ErrorModelScenario scenario = build_scenario(config);
  const EstimatorLaw law = build_law(config, variant, scenario.regressor_dim(), scenario.param_cols());
  SimulationOutput out;
  out.trajectory = run(scenario, law, config.sim);
  const auto [t3, t4] = envelope_window(config, out.trajectory, notes);
  out.bounds = envelope_check(out.trajectory, scenario.cert, analysis_gains(scenario, law), t3, t4);
  return out;
}

std::vector<Trajectory> simulate_laws(const RunConfig& config) {
  const ErrorModelScenario scenario = build_scenario(config);
  std::vector<EstimatorLaw> laws;
  for (LawVariant v : config.laws) {
    laws.push_back(build_law(config, v, scenario.regressor_dim(), scenario.param_cols()));
  }
  std::vector<std::future<Trajectory>> jobs;
  for (const auto& law : laws) {
    jobs.push_back(std::async(std::launch::async,
                              [&scenario, &law, &config] { return run(scenario, law, config.sim); }));
  }
  // Collect in list order; get() rethrows the first failure in that order.
  std::vector<Trajectory> runs;
  std::exception_ptr failure;
  for (auto& job : jobs) {
    try {
      runs.push_back(job.get());
    } catch (...) {
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return runs;
}

void write_compare_csv(std::ostream& os, const std::vector<Trajectory>& runs) {
  if (runs.empty()) return;
  os << "t";
  for (const auto& r : runs) {
    const std::string name = to_string(r.variant);
    os << ",V_" << name << ",norm_e_" << name << ",norm_theta_tilde_" << name << ",norm_gamma_" << name;
  }
  os << "\n";
  const std::size_t rows = runs.front().samples.size();
  for (const auto& r : runs) {
    if (r.samples.size() != rows) throw NumericalError("compare: runs have different sample counts");
  }
  for (std::size_t k = 0; k < rows; ++k) {
    os << format_number(runs.front().samples[k].t);
    for (const auto& r : runs) {
      const TrajectorySample& s = r.samples[k];
      os << ',' << format_number(s.V) << ',' << format_number(s.norm_e) << ','
         << format_number(s.norm_theta_tilde) << ',' << format_number(s.gamma.dense().norm());
    }
    os << "\n";
  }
}

int cmd_simulate(const RunConfig& config, const CommandIo& io) {
  return guarded(io, [&] {
    if (config.laws.size() != 1) {
      throw ConfigError("config key 'laws': simulate takes exactly one law; use compare for several");
    }
    const SimulationOutput out = simulate_law(config, config.laws.front(), &io.err);
    const std::string traj_path = output_path(io, config.output.trajectory);
    const std::string bound_path = output_path(io, config.output.bounds);
    write_file(traj_path, [&](std::ostream& os) { write_trajectory_csv(os, out.trajectory); });
    write_file(bound_path, [&](std::ostream& os) { write_bound_csv(os, out.bounds); });
    std::size_t violations = 0;
    for (const auto& b : out.bounds) violations += b.envelope_ok ? 0 : 1;
    io.out << "law " << to_string(config.laws.front()) << ": " << out.trajectory.samples.size()
           << " samples, final V = " << format_number(out.trajectory.samples.back().V)
           << ", envelope violations = " << violations << "\n"
           << "wrote " << traj_path << "\nwrote " << bound_path << "\n";
    return exit_code::kOk;
  });
}

int cmd_compare(const RunConfig& config, const CommandIo& io) {
  return guarded(io, [&] {
    if (config.laws.empty()) throw ConfigError("config key 'laws': empty law list");
    if (config.laws.size() == 1) {
      const int code = cmd_simulate(config, io);
      if (code != exit_code::kOk) return code;
    }
    const std::vector<Trajectory> runs = simulate_laws(config);
    const std::string path = output_path(io, config.output.compare);
    write_file(path, [&](std::ostream& os) { write_compare_csv(os, runs); });
    for (const auto& r : runs) {
      io.out << to_string(r.variant) << ": final V = " << format_number(r.samples.back().V)
             << ", final |theta~| = " << format_number(r.samples.back().norm_theta_tilde)
             << ", final |Gamma|_F = " << format_number(r.samples.back().gamma.dense().norm()) << "\n";
    }
    io.out << "wrote " << path << "\n";
    return exit_code::kOk;
  });
}

CsvTable read_csv(std::istream& is, const std::string& source) {
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  auto split = [](const std::string& text) {
    std::vector<std::string> cells;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      const auto b = cell.find_first_not_of(" \t\r");
      const auto e = cell.find_last_not_of(" \t\r");
      cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
    }
    return cells;
  };
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<std::string> cells = split(line);
    if (table.header.empty()) {
      table.header = std::move(cells);
      continue;
    }
    if (cells.size() != table.header.size()) {
      throw IoError(source + ":" + std::to_string(line_no) + ": expected " +
                    std::to_string(table.header.size()) + " fields, found " + std::to_string(cells.size()));
    }
    std::vector<double> row;
    for (const auto& c : cells) {
      char* end = nullptr;
      const double v = std::strtod(c.c_str(), &end);
      if (c.empty() || *end != '\0') {
        throw IoError(source + ":" + std::to_string(line_no) + ": '" + c + "' is not a number");
      }
      row.push_back(v);
    }
    table.rows.push_back(std::move(row));
  }
  if (table.header.size() < 2) throw IoError(source + ": need a time column and at least one regressor column");
  if (table.rows.size() < 2) throw IoError(source + ": need at least two samples");
  return table;
}

RegressorTrace trace_from_csv(const CsvTable& table, const std::vector<std::string>& columns) {
  std::vector<std::size_t> idx;
  if (columns.empty()) {
    for (std::size_t k = 1; k < table.header.size(); ++k) idx.push_back(k);
  } else {
    for (const auto& name : columns) {
      std::size_t k = 0;
      while (k < table.header.size() && table.header[k] != name) ++k;
      if (k == table.header.size()) throw IoError("trace has no column '" + name + "'");
      idx.push_back(k);
    }
  }
  std::vector<double> times;
  MatXd samples(static_cast<Eigen::Index>(table.rows.size()), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    times.push_back(table.rows[r][0]);
    for (std::size_t c = 0; c < idx.size(); ++c) {
      samples(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = table.rows[r][idx[c]];
    }
  }
  try {
    return RegressorTrace(std::move(times), std::move(samples));
  } catch (const PreconditionError& e) {
    throw IoError(std::string("trace: ") + e.what());
  }
}

int cmd_excite(const RunConfig& config, const ExciteOptions& options, const CommandIo& io) {
  return guarded(io, [&] {
    RegressorTrace trace;
    std::optional<Trajectory> traj;
    if (options.trace_path) {
      std::ifstream in(*options.trace_path);
      if (!in) throw IoError("cannot read trace file '" + *options.trace_path + "'");
      trace = trace_from_csv(read_csv(in, *options.trace_path), options.columns);
    } else {
      const ErrorModelScenario scenario = build_scenario(config);
      const EstimatorLaw law =
          build_law(config, config.laws.front(), scenario.regressor_dim(), scenario.param_cols());
      traj = run(scenario, law, config.sim);
      trace = traj->regressor_trace();
    }
    std::vector<std::pair<double, double>> windows = options.windows;
    if (windows.empty() && config.analysis.fe_window && !options.trace_path) {
      windows.push_back(*config.analysis.fe_window);
    }
    if (windows.empty() && !options.pe_window) {
      windows.emplace_back(trace.t.front(), trace.t.back());
    }

    const ExcitationConfig ecfg = excitation_config(config);
    std::vector<ExcitationReport> reports;
    for (const auto& [t1, t2] : windows) {
      try {
        reports.push_back(detect_fe(trace, t1, t2, ecfg));
      } catch (const RangeError& e) {
        throw ConfigError("window [" + format_number(t1) + ", " + format_number(t2) + "]: " + e.what());
      }
    }
    if (options.pe_window) {
      const double stride = options.pe_stride.value_or(trace.spacing());
      try {
        reports.push_back(detect_pe(trace, *options.pe_window, stride, ecfg));
      } catch (const RangeError& e) {
        throw ConfigError(std::string("--pe: ") + e.what());
      } catch (const PreconditionError& e) {
        throw ConfigError(std::string("--pe: ") + e.what());
      }
    }

    io.out << "trace: " << trace.size() << " samples of dim " << trace.dim() << " on ["
           << format_number(trace.t.front()) << ", " << format_number(trace.t.back()) << "]\n";
    std::vector<std::optional<PropagationTimeline>> timelines;
    for (const auto& r : reports) {
      io.out << to_string(r.kind) << " on [" << format_number(r.t1) << ", " << format_number(r.t2)
             << "]: alpha = " << format_number(r.alpha) << ", T = " << format_number(r.T)
             << ", d = " << format_number(r.d) << ", alpha0 = " << format_number(r.alpha0)
             << ", excitation level " << (r.meets_assumption3 ? "met" : "not met") << "\n";
      std::optional<PropagationTimeline> tl;
      if (r.meets_assumption3) {
        tl = propagation_timeline(r, ecfg);
        io.out << "  Omega_FE = " << format_number(tl->omega_fe) << ", t3 = " << format_number(tl->t3) << "\n";
        if (traj && tl->t3 <= traj->samples.back().t) {
          const double t3 = sample_time_at_or_after(*traj, tl->t3);
          for (const auto& s : traj->samples) {
            if (s.t != t3) continue;
            try {
              tl = propagation_timeline(
                  r, ecfg, GammaPhaseInput{config.gains.rho_gamma, config.gains.lambda_gamma, s.gamma.dense().norm()});
              io.out << "  Gamma_FE = " << format_number(tl->gamma_fe) << ", t4 = " << format_number(tl->t4) << "\n";
            } catch (const PreconditionError& e) {
              io.out << "  no learning-rate phase: " << e.what() << "\n";
            }
          }
        }
      }
      timelines.push_back(tl);
    }

    if (options.csv_path) {
      const std::string path = output_path(io, *options.csv_path);
      write_file(path, [&](std::ostream& os) {
        os << "kind,t1,t2,T,alpha,d,alpha0,meets_level,omega_fe,t3,gamma_fe,t4\n";
        const std::string nan = "nan";
        for (std::size_t k = 0; k < reports.size(); ++k) {
          const auto& r = reports[k];
          const auto& tl = timelines[k];
          os << to_string(r.kind) << ',' << format_number(r.t1) << ',' << format_number(r.t2) << ','
             << format_number(r.T) << ',' << format_number(r.alpha) << ',' << format_number(r.d) << ','
             << format_number(r.alpha0) << ',' << (r.meets_assumption3 ? 1 : 0) << ','
             << (tl ? format_number(tl->omega_fe) : nan) << ',' << (tl ? format_number(tl->t3) : nan) << ','
             << (tl && tl->has_gamma_phase ? format_number(tl->gamma_fe) : nan) << ','
             << (tl && tl->has_gamma_phase ? format_number(tl->t4) : nan) << "\n";
        }
      });
      io.out << "wrote " << path << "\n";
    }
    return exit_code::kOk;
  });
}

}  // namespace tvlr
