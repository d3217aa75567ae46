#include "schurerk/cli/commands.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>

#include "schurerk/errors.hpp"
#include "schurerk/tableaux.hpp"

namespace schurerk::cli {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool is_tableau(const std::string& name) {
  const auto names = tableau_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

struct ErrorNorms {
  double l2;
  double max;
};

ErrorNorms error_at_end(const IVProblem& problem, const IntegrationResult& result) {
  const Sample& last = result.final_sample();
  const Vector diff = last.y - problem.exact(last.t);
  return {diff.norm(), diff.cwiseAbs().maxCoeff()};
}

std::string join_csv(std::initializer_list<std::string> fields) {
  std::string line;
  bool first = true;
  for (const auto& f : fields) {
    if (!first) line += ',';
    line += f;
    first = false;
  }
  return line;
}

}  // namespace

MethodSpec parse_method(const std::string& text, Formulation fallback) {
  MethodSpec spec;
  spec.label = text;
  spec.formulation = fallback;
  std::string base = text;
  if (!is_tableau(base) && base.size() > 1 && (base.back() == 'M' || base.back() == 'V')) {
    spec.formulation = base.back() == 'M' ? Formulation::matrix : Formulation::vector;
    base.pop_back();
  }
  if (base == "ERK43ZB3") {
    base = "ERK43ZB";
    spec.row = PropagatedRow::embedded_row;
  }
  if (!is_tableau(base)) throw std::invalid_argument("unknown method '" + text + "'");
  spec.tableau = base;
  return spec;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::vector<double> step_sweep(double h_max, double h_min, int steps) {
  if (!(h_max > 0.0) || !(h_min > 0.0) || h_min > h_max) {
    throw std::invalid_argument("step sweep needs 0 < h_min <= h_max");
  }
  std::vector<double> out;
  if (steps > 0) {
    if (steps == 1) return {h_max};
    const double ratio = std::pow(h_min / h_max, 1.0 / (steps - 1));
    for (int i = 0; i < steps; ++i) out.push_back(h_max * std::pow(ratio, i));
    return out;
  }
  for (double h = h_max; h >= h_min * (1.0 - 1e-12); h /= 2.0) out.push_back(h);
  return out;
}

IVProblem build_problem(const ProblemChoice& choice) {
  ProblemParams params = choice.params;
  if (!params.y0 && (choice.name == "quadratic" || choice.name == "linear2")) {
    std::mt19937_64 rng(choice.seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Vector y0(2);
    y0(0) = u(rng);
    y0(1) = u(rng);
    params.y0 = y0;
  }
  return make_problem(choice.name, params);
}

// --- converge ---------------------------------------------------------------

std::vector<ConvergeRow> run_converge(const ConvergeConfig& config) {
  if (config.steps.empty()) throw std::invalid_argument("converge: empty step sweep");
  if (config.methods.empty()) throw std::invalid_argument("converge: no methods given");
  const IVProblem problem = build_problem(config.problem);
  if (!problem.exact) {
    throw std::invalid_argument("converge: problem '" + problem.name + "' has no closed form");
  }
  std::vector<MethodSpec> specs;
  for (const auto& m : config.methods) specs.push_back(parse_method(m, config.formulation));

  std::vector<double> steps = config.steps;
  std::sort(steps.begin(), steps.end(), std::greater<>());

  std::vector<ConvergeRow> rows;
  RunOptions options;
  options.record_trajectory = false;
  for (const auto& spec : specs) {
    const ExponentialTableau& tab = tableau(spec.tableau);
    options.row = spec.row;
    std::optional<ConvergeRow> prev;
    for (double h : steps) {
      ConvergeRow row;
      row.method = spec.label;
      row.formulation = tab.classical ? "classical" : to_string(spec.formulation);
      row.h = h;
      const auto start = std::chrono::steady_clock::now();
      try {
        const IntegrationResult r = integrate_fixed(problem, tab, h, spec.formulation, options);
        const ErrorNorms e = error_at_end(problem, r);
        row.err_l2 = e.l2;
        row.err_max = e.max;
      } catch (const NumericalError&) {
        row.err_l2 = row.err_max = kInf;
        row.failed = true;
      }
      row.wall_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
              .count();
      if (prev && std::isfinite(row.err_l2) && std::isfinite(prev->err_l2) && row.err_l2 > 0.0 &&
          prev->err_l2 > 0.0) {
        row.observed_order = std::log(prev->err_l2 / row.err_l2) / std::log(prev->h / row.h);
      }
      prev = row;
      rows.push_back(row);
    }
  }
  return rows;
}

void write_converge(std::ostream& out, const std::vector<ConvergeRow>& rows) {
  out << "method,formulation,h,err_l2,err_max,observed_order,wall_ms\n";
  for (const auto& r : rows) {
    out << join_csv({r.method, r.formulation, format_double(r.h), format_double(r.err_l2),
                     format_double(r.err_max),
                     r.observed_order ? format_double(*r.observed_order) : std::string(),
                     format_double(r.wall_ms)})
        << '\n';
  }
}

// --- bench ------------------------------------------------------------------

std::vector<BenchRow> run_bench(const BenchConfig& config) {
  if (!(config.h > 0.0)) throw std::invalid_argument("bench: h must be positive");
  const IVProblem problem = build_problem(config.problem);
  const ExponentialTableau& tab = tableau(parse_method(config.method, Formulation::vector).tableau);
  RunOptions options;
  options.record_trajectory = false;

  std::vector<BenchRow> rows;
  for (Formulation f : {Formulation::matrix, Formulation::vector}) {
    std::optional<BenchRow> best;
    for (int rep = 0; rep < std::max(1, config.repeats); ++rep) {
      const IntegrationResult r = integrate_fixed(problem, tab, config.h, f, options);
      BenchRow row;
      row.formulation = to_string(f);
      row.n = static_cast<long>(problem.dimension());
      row.steps = r.stats.steps_accepted;
      row.schur_ms = r.stats.schur_ms;
      row.weights_ms = r.stats.weights_ms;
      row.stepping_ms = r.stats.stepping_ms;
      row.total_ms = r.stats.wall_ms;
      if (!best || row.total_ms < best->total_ms) best = row;
    }
    rows.push_back(*best);
  }
  for (auto& r : rows) r.speedup_vs_matrix = rows.front().total_ms / r.total_ms;
  return rows;
}

void write_bench(std::ostream& out, const std::vector<BenchRow>& rows) {
  out << "formulation,n,steps,schur_ms,weights_ms,stepping_ms,total_ms,speedup_vs_matrix\n";
  for (const auto& r : rows) {
    out << join_csv({r.formulation, std::to_string(r.n), std::to_string(r.steps),
                     format_double(r.schur_ms), format_double(r.weights_ms),
                     format_double(r.stepping_ms), format_double(r.total_ms),
                     format_double(r.speedup_vs_matrix)})
        << '\n';
  }
}

// --- adaptive ---------------------------------------------------------------

std::vector<AdaptiveRun> run_adaptive(const AdaptiveConfig& config) {
  if (config.rtols.empty()) throw std::invalid_argument("adaptive: no tolerances given");
  const IVProblem problem = build_problem(config.problem);
  const MethodSpec spec = parse_method(config.method, config.formulation);
  const ExponentialTableau& tab = tableau(spec.tableau);
  RunOptions options;
  options.record_trajectory = false;
  options.record_steps = true;
  options.row = spec.row;

  std::vector<AdaptiveRun> runs;
  for (double rtol : config.rtols) {
    StepControl control = config.control;
    control.rtol = rtol;
    control.atol = config.atol.value_or(rtol);
    const IntegrationResult r = integrate_adaptive(problem, tab, control, spec.formulation, options);
    AdaptiveRun run;
    run.rtol = control.rtol;
    run.atol = control.atol;
    run.steps = r.steps;
    run.stats = r.stats;
    run.final_error = problem.exact ? error_at_end(problem, r).l2 : kNaN;
    runs.push_back(std::move(run));
  }
  return runs;
}

void write_adaptive(std::ostream& out, const std::vector<AdaptiveRun>& runs) {
  out << "kind,rtol,t,h,err_norm,accepted,weight_refresh,steps_accepted,steps_rejected,"
         "weight_refresh_count,final_error\n";
  for (const auto& run : runs) {
    const std::string rtol = format_double(run.rtol);
    for (const auto& s : run.steps) {
      out << join_csv({"step", rtol, format_double(s.t), format_double(s.h),
                       format_double(s.err_norm), s.accepted ? "1" : "0",
                       s.weight_refresh ? "1" : "0", "", "", "", ""})
          << '\n';
    }
    out << join_csv({"summary", rtol, "", "", "", "", "", std::to_string(run.stats.steps_accepted),
                     std::to_string(run.stats.steps_rejected),
                     std::to_string(run.stats.weight_refresh_count),
                     format_double(run.final_error)})
        << '\n';
  }
}

// --- stiffness --------------------------------------------------------------

StiffnessReport run_stiffness(const StiffnessConfig& config) {
  return stiffness_report(build_problem(config.problem), config.report);
}

void write_stiffness(std::ostream& out, const StiffnessReport& report) {
  out << "t_window,gamma_min,gamma_max,kappa,r_nl,stiffness_ratio\n";
  for (const auto& w : report.windows) {
    out << join_csv({format_double(w.lyapunov.t), format_double(w.lyapunov.gamma.minCoeff()),
                     format_double(w.lyapunov.gamma.maxCoeff()), format_double(w.kappa),
                     format_double(w.r_nl), format_double(report.ratio)})
        << '\n';
  }
}

// --- probe ------------------------------------------------------------------

std::vector<ProbeRow> run_probe(const ProbeConfig& config) {
  const IVProblem problem = build_problem(config.problem);
  std::vector<ProbeRow> rows;
  for (double v : config.fixed_values) {
    for (const auto& p : fixed_curve_probe(problem, config.component, v, config.epsilon,
                                           config.options)) {
      rows.push_back({config.component, v, p});
    }
  }
  return rows;
}

void write_probe(std::ostream& out, const std::vector<ProbeRow>& rows) {
  out << "component,fixed_value,y1,y2,f1,f2,angle_below,angle_above\n";
  for (const auto& r : rows) {
    const auto& c = r.point.on_curve;
    out << join_csv({std::to_string(r.component), format_double(r.fixed_value),
                     format_double(c.y1), format_double(c.y2), format_double(c.f1),
                     format_double(c.f2), format_double(r.point.angle_below),
                     format_double(r.point.angle_above)})
        << '\n';
  }
}

// --- command line -----------------------------------------------------------

namespace {

struct CommonFlags {
  std::string problem;
  int grid = 0;
  std::optional<double> t_end;
  std::vector<double> y0;
  std::uint64_t seed = 0;
  std::string out_path;
};

void add_common(CLI::App& cmd, CommonFlags& flags, const std::string& default_problem) {
  flags.problem = default_problem;
  cmd.add_option("--problem", flags.problem, "Problem name")->capture_default_str();
  cmd.add_option("--grid", flags.grid, "Interior grid points for PDE problems");
  cmd.add_option("--tend", flags.t_end, "Final time");
  cmd.add_option("--y0", flags.y0, "Initial state, for problems without a canonical one")
      ->delimiter(',');
  cmd.add_option("--seed", flags.seed, "Seed for randomly drawn initial states")
      ->capture_default_str();
  cmd.add_option("--out", flags.out_path, "Write CSV here instead of stdout");
}

ProblemChoice choice_of(const CommonFlags& flags) {
  ProblemChoice c;
  c.name = flags.problem;
  c.params.grid = flags.grid;
  c.params.t_end = flags.t_end;
  if (!flags.y0.empty()) {
    Vector y(static_cast<Eigen::Index>(flags.y0.size()));
    for (std::size_t i = 0; i < flags.y0.size(); ++i) y(static_cast<Eigen::Index>(i)) = flags.y0[i];
    c.params.y0 = y;
  }
  c.seed = flags.seed;
  return c;
}

class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw std::invalid_argument("cannot open '" + path + "' for writing");
      stream_ = &file_;
    }
  }
  std::ostream& get() { return *stream_; }

 private:
  std::ofstream file_;
  std::ostream* stream_;
};

Formulation formulation_flag(const std::string& s) { return parse_formulation(s); }

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Exponential Runge-Kutta integration with Schur-diagonalized linear parts"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.require_subcommand(1);

  // converge
  CommonFlags cflags;
  std::string c_methods = "ERK4HO5";
  std::string c_form = "vector";
  std::vector<double> c_h;
  double c_hmin = 0.0, c_hmax = 0.0;
  int c_hsteps = 0;
  auto* converge = app.add_subcommand("converge", "Error at t_end over a step-size sweep");
  add_common(*converge, cflags, "heat_quartic");
  converge->add_option("--method", c_methods, "Comma-separated methods")->capture_default_str();
  converge->add_option("--formulation", c_form, "matrix or vector")->capture_default_str();
  converge->add_option("--h", c_h, "Explicit step sizes")->delimiter(',');
  converge->add_option("--h-min", c_hmin, "Smallest step of the sweep");
  converge->add_option("--h-max", c_hmax, "Largest step of the sweep");
  converge->add_option("--h-steps", c_hsteps, "Number of geometric steps (0: halve)");

  // bench
  CommonFlags bflags;
  std::string b_method = "ERK43ZB";
  double b_h = 0.3;
  int b_repeats = 1;
  auto* bench = app.add_subcommand("bench", "Matrix versus vector formulation timing");
  add_common(*bench, bflags, "oscillatory");
  bench->add_option("--method", b_method, "Method")->capture_default_str();
  bench->add_option("--h", b_h, "Fixed step size")->capture_default_str();
  bench->add_option("--repeats", b_repeats, "Keep the fastest of this many runs");

  // adaptive
  CommonFlags aflags;
  std::string a_method = "ERK43ZB";
  std::string a_form = "vector";
  std::vector<double> a_rtol = {1e-6};
  std::optional<double> a_atol;
  double a_hinit = 0.0;
  auto* adaptive = app.add_subcommand("adaptive", "Embedded step-size control, per-step log");
  add_common(*adaptive, aflags, "system2");
  adaptive->add_option("--method", a_method, "Method with an embedded row")->capture_default_str();
  adaptive->add_option("--formulation", a_form, "matrix or vector")->capture_default_str();
  adaptive->add_option("--rtol", a_rtol, "Relative tolerance(s)")->delimiter(',');
  adaptive->add_option("--atol", a_atol, "Absolute tolerance (default: rtol)");
  adaptive->add_option("--h", a_hinit, "Initial step (0: 1e-3 of the span)");

  // stiffness
  CommonFlags sflags;
  ReportOptions s_opts;
  auto* stiff = app.add_subcommand("stiffness", "Lyapunov exponents, curvature and R_nl");
  add_common(*stiff, sflags, "system2");
  stiff->add_option("--windows", s_opts.windows, "Number of windows")->capture_default_str();
  stiff->add_option("--tau", s_opts.tau, "Window length")->capture_default_str();
  stiff->add_option("--substeps", s_opts.lyapunov.substeps, "Steps per window")
      ->capture_default_str();
  stiff->add_option("--component", s_opts.component, "0-based component for curvature");
  stiff->add_option("--threshold", s_opts.threshold, "R_nl report threshold")
      ->capture_default_str();

  // probe
  CommonFlags pflags;
  ProbeConfig p_cfg;
  auto* probe = app.add_subcommand("probe", "Slope-field alignment across fixed curves");
  add_common(*probe, pflags, "quadratic");
  probe->add_option("--component", p_cfg.component, "Fixed curve C1 or C2")
      ->check(CLI::IsMember({1, 2}));
  probe->add_option("--at", p_cfg.fixed_values, "Values of the held coordinate")->delimiter(',');
  probe->add_option("--epsilon", p_cfg.epsilon, "Offset across the curve")->capture_default_str();
  probe->add_option("--free", p_cfg.options.free_coordinate, "Coordinate solved for (1 or 2)")
      ->check(CLI::IsMember({1, 2}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (converge->parsed()) {
      ConvergeConfig cfg;
      cfg.problem = choice_of(cflags);
      std::stringstream ss(c_methods);
      for (std::string m; std::getline(ss, m, ',');) {
        if (!m.empty()) cfg.methods.push_back(m);
      }
      cfg.formulation = formulation_flag(c_form);
      cfg.steps = c_h;
      if (cfg.steps.empty() && c_hmax > 0.0) {
        cfg.steps = step_sweep(c_hmax, c_hmin > 0.0 ? c_hmin : c_hmax, c_hsteps);
      }
      const auto rows = run_converge(cfg);
      Output o(cflags.out_path, out);
      write_converge(o.get(), rows);
      const bool failed = std::any_of(rows.begin(), rows.end(), [](auto& r) { return r.failed; });
      if (failed) {
        err << "error: at least one run became unstable\n";
        return 3;
      }
    } else if (bench->parsed()) {
      BenchConfig cfg;
      cfg.problem = choice_of(bflags);
      cfg.method = b_method;
      cfg.h = b_h;
      cfg.repeats = b_repeats;
      const auto rows = run_bench(cfg);
      Output o(bflags.out_path, out);
      write_bench(o.get(), rows);
    } else if (adaptive->parsed()) {
      AdaptiveConfig cfg;
      cfg.problem = choice_of(aflags);
      cfg.method = a_method;
      cfg.formulation = formulation_flag(a_form);
      cfg.rtols = a_rtol;
      cfg.atol = a_atol;
      cfg.control.h_init = a_hinit;
      const auto runs = run_adaptive(cfg);
      Output o(aflags.out_path, out);
      write_adaptive(o.get(), runs);
    } else if (stiff->parsed()) {
      StiffnessConfig cfg;
      cfg.problem = choice_of(sflags);
      cfg.report = s_opts;
      const auto report = run_stiffness(cfg);
      Output o(sflags.out_path, out);
      write_stiffness(o.get(), report);
    } else if (probe->parsed()) {
      p_cfg.problem = choice_of(pflags);
      const auto rows = run_probe(p_cfg);
      Output o(pflags.out_path, out);
      write_probe(o.get(), rows);
    }
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::out_of_range& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace schurerk::cli
