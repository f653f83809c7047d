#pragma once

// YAML experiment files for `paracycle run`. Errors carry the 1-based line
// of the offending node. See README.md for the full key reference.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "paracycle/ptl.hpp"

namespace paracycle {

struct OuterDt {
  /// Absolute outer step, or a multiple of the smallest Euler limit among
  /// the operators evaluated on the initial state.
  double value = 0.0;
  bool euler_multiple = false;
};

struct ExperimentConfig {
  GridPtr grid;
  BoundaryCondition bc;
  State initial;
  std::vector<SplitOperator> operators;
  OuterDt outer_dt;
  int n_outer_steps = 1;
  std::optional<std::uint64_t> seed;
  std::string output_dir = "out";
};

ExperimentConfig parse_experiment(const std::string& yaml_text);
ExperimentConfig load_experiment(const std::string& path);

struct ExperimentResult {
  State state;
  double outer_dt = 0.0;
  std::vector<std::string> operator_names;
  std::vector<CycleReport> reports;  ///< per operator, all outer steps
};

ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Writes <dir>/<field>_final.csv, <dir>/coords.csv and
/// <dir>/report_<operator>.csv. Creates the directory if needed.
void write_experiment_outputs(const ExperimentResult& result, const std::string& dir);

}  // namespace paracycle
