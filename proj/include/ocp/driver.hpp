#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ocp/admm.hpp"
#include "ocp/metrics.hpp"
#include "ocp/problems.hpp"

namespace ocp {

/// Flat key-value run configuration. See README for the grammar.
struct RunConfig {
  std::string problem = "example1";
  int mesh_exponent = 5;
  std::optional<double> tau;
  std::optional<double> beta;
  std::optional<double> alpha;
  std::optional<double> tol;
  std::optional<double> sigma_factor;
  std::optional<InnerMode> inner_mode;
  std::optional<int> max_outer;
  std::optional<int> max_inner;
  std::string output_dir = "out";
  bool snapshots = false;
  bool iteration_log = true;
  std::map<std::string, std::string> custom;

  /// Applies one "key = value" assignment; throws ConfigError on unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  void validate() const;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
std::string serialize_config(const RunConfig& cfg);
bool operator==(const RunConfig& a, const RunConfig& b);

ProblemSpec resolve_problem(const RunConfig& cfg);
/// Problem defaults with the config overrides applied.
AdmmConfig resolve_admm(const ProblemSpec& spec, const RunConfig& cfg);

struct SolveOutput {
  ProblemSpec spec;
  std::unique_ptr<PdeOperator> op;
  DataBundle data;
  ControlProblem problem;
  AdmmResult result;
  /// S(u) recomputed from the final control.
  SpaceTimeField state;
  RunReport report;
};

/// Builds the operator and data for `spec`, runs the solver and fills the report.
SolveOutput solve(const ProblemSpec& spec, int mesh_exponent, const AdmmConfig& admm,
                  std::optional<double> tau = std::nullopt, const IterationCallback& on_iteration = {});

/// Runs one configuration end to end and writes report.csv, iterations.csv and
/// optional snapshots into cfg.output_dir.
RunReport run(const RunConfig& cfg);

/// Row grid of one of the benchmark tables.
struct TableRow {
  int example = 1;
  int mesh = 5;
  double beta = 3.0;
  InnerMode mode = InnerMode::adaptive();
};

std::vector<TableRow> table_rows(int table, int max_i);
/// Runs each row (concurrently when workers > 1) and writes table<N>.csv into out_dir.
std::vector<RunReport> reproduce(int table, int max_i, int workers, const std::string& out_dir);

struct OracleCheck {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double threshold = 0.0;
};

/// Test hook: when set, adjoint applications are replaced by this function.
using AdjointOverride = std::function<SpaceTimeField(const PdeOperator&, const SpaceTimeField&)>;

/// level: "linalg", "adjoint", "subproblem" or "all".
std::vector<OracleCheck> oracle_check(const std::string& level, const AdjointOverride& adjoint_override = {});

}  // namespace ocp
