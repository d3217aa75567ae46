#pragma once

// Subcommands of the schurerk harness. Each run_* returns rows; write_*
// renders them as CSV. The executable in tools/main.cpp only parses flags.

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "schurerk/integrate.hpp"
#include "schurerk/problems.hpp"
#include "schurerk/stiffness.hpp"

namespace schurerk::cli {

/// Method names as typed on the command line: a tableau name, optionally
/// followed by M (matrix) or V (vector); ERK43ZB3 selects the embedded row.
struct MethodSpec {
  std::string label;
  std::string tableau;
  Formulation formulation = Formulation::vector;
  PropagatedRow row = PropagatedRow::final_row;
};

/// Throws std::invalid_argument for names that resolve to no tableau.
MethodSpec parse_method(const std::string& text, Formulation fallback);

/// Shortest round-trip decimal form; "inf", "-inf" and "nan" otherwise.
std::string format_double(double v);

/// h_max, h_max/2, ... down to h_min (inclusive within rounding), or
/// `steps` geometrically spaced values when steps > 0.
std::vector<double> step_sweep(double h_max, double h_min, int steps);

struct ProblemChoice {
  std::string name;
  ProblemParams params;
  std::uint64_t seed = 0;
};

/// Builds the named problem; initial states that the problem leaves to the
/// caller are drawn uniformly from [-1, 1] using the seed.
IVProblem build_problem(const ProblemChoice& choice);

// --- converge ---------------------------------------------------------------

struct ConvergeConfig {
  ProblemChoice problem;
  std::vector<std::string> methods;
  Formulation formulation = Formulation::vector;
  std::vector<double> steps;
};

struct ConvergeRow {
  std::string method;
  std::string formulation;
  double h = 0.0;
  double err_l2 = 0.0;
  double err_max = 0.0;
  std::optional<double> observed_order;
  double wall_ms = 0.0;
  bool failed = false;
};

/// Rows ordered by method (as given), then h descending. Numerical failures
/// produce rows with infinite errors instead of throwing.
std::vector<ConvergeRow> run_converge(const ConvergeConfig& config);
void write_converge(std::ostream& out, const std::vector<ConvergeRow>& rows);

// --- bench ------------------------------------------------------------------

struct BenchConfig {
  ProblemChoice problem;
  std::string method = "ERK43ZB";
  double h = 0.3;
  int repeats = 1;
};

struct BenchRow {
  std::string formulation;
  long n = 0;
  long steps = 0;
  double schur_ms = 0.0;
  double weights_ms = 0.0;
  double stepping_ms = 0.0;
  double total_ms = 0.0;
  double speedup_vs_matrix = 1.0;
};

/// One matrix and one vector run on the same problem; the fastest of
/// `repeats` runs is kept for each.
std::vector<BenchRow> run_bench(const BenchConfig& config);
void write_bench(std::ostream& out, const std::vector<BenchRow>& rows);

// --- adaptive ---------------------------------------------------------------

struct AdaptiveConfig {
  ProblemChoice problem;
  std::string method = "ERK43ZB";
  Formulation formulation = Formulation::vector;
  std::vector<double> rtols = {1e-6};
  std::optional<double> atol;  // defaults to each rtol
  StepControl control;
};

struct AdaptiveRun {
  double rtol = 0.0;
  double atol = 0.0;
  std::vector<StepRecord> steps;
  IntegrationStats stats;
  /// Euclidean norm of the error at t_end; NaN without a closed form.
  double final_error = 0.0;
};

std::vector<AdaptiveRun> run_adaptive(const AdaptiveConfig& config);
void write_adaptive(std::ostream& out, const std::vector<AdaptiveRun>& runs);

// --- stiffness --------------------------------------------------------------

struct StiffnessConfig {
  ProblemChoice problem;
  ReportOptions report;
};

StiffnessReport run_stiffness(const StiffnessConfig& config);
void write_stiffness(std::ostream& out, const StiffnessReport& report);

// --- probe ------------------------------------------------------------------

struct ProbeConfig {
  ProblemChoice problem;
  int component = 2;
  std::vector<double> fixed_values = {0.0};
  double epsilon = 1e-3;
  ProbeOptions options;
};

struct ProbeRow {
  int component = 0;
  double fixed_value = 0.0;
  ProbePoint point;
};

std::vector<ProbeRow> run_probe(const ProbeConfig& config);
void write_probe(std::ostream& out, const std::vector<ProbeRow>& rows);

/// Full command line entry point. Returns 0 on success, 2 on usage or name
/// errors and 3 on numerical failure.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace schurerk::cli
