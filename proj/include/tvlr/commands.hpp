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

#ifndef TVLR_COMMANDS_HPP
#define TVLR_COMMANDS_HPP

// Subcommand bodies behind the tvlr executable. Each returns a process exit
// code and reports problems on `err`.

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tvlr/analysis.hpp"
#include "tvlr/config.hpp"
#include "tvlr/excitation.hpp"

namespace tvlr {

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kConfig = 2;
inline constexpr int kInvariant = 3;
inline constexpr int kIo = 4;
}  // namespace exit_code

struct CommandIo {
  std::ostream& out;
  std::ostream& err;
  std::string output_dir;  // prefix for relative output paths; empty for the working directory
};

/// Chooses [t3, t4] for the bound report: the configured envelope window,
/// else the window following a configured finite excitation, else the whole
/// trajectory.
std::pair<double, double> envelope_window(const RunConfig& config, const Trajectory& traj,
                                          std::ostream* notes = nullptr);

struct SimulationOutput {
  Trajectory trajectory;
  std::vector<BoundReport> bounds;
};

/// Simulation plus bound report for one law. Throws on any error.
SimulationOutput simulate_law(const RunConfig& config, LawVariant variant,
                              std::ostream* notes = nullptr);

/// Runs every law on the same scenario, one thread per law. The result is in
/// the order of `config.laws`.
std::vector<Trajectory> simulate_laws(const RunConfig& config);

void write_compare_csv(std::ostream& os, const std::vector<Trajectory>& runs);

int cmd_simulate(const RunConfig& config, const CommandIo& io);
int cmd_compare(const RunConfig& config, const CommandIo& io);

struct ExciteOptions {
  std::optional<std::string> trace_path;  // CSV: time column then regressor columns
  std::vector<std::string> columns;       // regressor column names; all but time when empty
  std::vector<std::pair<double, double>> windows;
  std::optional<double> pe_window;
  std::optional<double> pe_stride;        // defaults to the sample spacing
  std::optional<std::string> csv_path;
};

/// Excitation report for a recorded trace, or for the regressor of a
/// simulated run of the first configured law when no trace is given.
int cmd_excite(const RunConfig& config, const ExciteOptions& options, const CommandIo& io);

/// Reads a numeric CSV with a header row. Throws IoError on malformed input.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};
CsvTable read_csv(std::istream& is, const std::string& source);

RegressorTrace trace_from_csv(const CsvTable& table, const std::vector<std::string>& columns);

}  // namespace tvlr

#endif  // TVLR_COMMANDS_HPP
