#include "schurerk/integrate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "schurerk/errors.hpp"

namespace schurerk {

namespace {

using Eigen::Index;
using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

// Stage weights of one tableau for one step size. Entries that are
// structurally zero are left empty and skipped.
template <class W>
struct Weights {
  std::vector<W> propagators;  // phi_0(c_i z); index 0 unused
  W final_propagator;          // phi_0(z)
  std::vector<std::vector<std::optional<W>>> a;
  std::vector<std::optional<W>> b;
  std::vector<std::optional<W>> b_embedded;
};

template <class Alg>
Weights<typename Alg::value_type> build_weights(const ExponentialTableau& tab, const Alg& alg) {
  using W = typename Alg::value_type;
  auto eval = [&](const PhiExpr& e) -> std::optional<W> {
    if (e.is_zero()) return std::nullopt;
    return evaluate(e, alg);
  };
  Weights<W> w;
  const int s = tab.stage_count();
  w.propagators.resize(s);
  w.a.resize(s);
  for (int i = 1; i < s; ++i) {
    w.propagators[i] = alg.leaf(0, tab.step_fractions[i]);
    for (const auto& e : tab.entries[i]) w.a[i].push_back(eval(e));
  }
  w.final_propagator = alg.leaf(0, Rational(1));
  for (const auto& e : tab.final_row) w.b.push_back(eval(e));
  if (tab.embedded_row) {
    for (const auto& e : tab.embedded_row->weights) w.b_embedded.push_back(eval(e));
  }
  return w;
}

inline Vector apply(const Vector& w, const Vector& v) { return w.cwiseProduct(v); }
inline Vector apply(const Matrix& w, const Vector& v) { return w * v; }
inline void add_scaled(Vector& acc, double h, const Vector& w, const Vector& v) {
  acc += h * w.cwiseProduct(v);
}
inline void add_scaled(Vector& acc, double h, const Matrix& w, const Vector& v) {
  acc.noalias() += h * (w * v);
}

struct Attempt {
  Vector high;                // propagated row
  std::optional<Vector> low;  // the other row, when the tableau has one
};

// Integrates in "working" coordinates: the original ones, or Y = U† y for the
// vector formulation of a dense L.
class Engine {
 public:
  virtual ~Engine() = default;
  virtual Vector to_working(const Vector& y) const = 0;
  virtual Vector to_original(const Vector& y) const = 0;
  virtual Attempt attempt(double t, const Vector& y, double h, PropagatedRow row) = 0;

  IntegrationStats stats;
  bool last_attempt_refreshed = false;
};

template <class W>
class ErkEngine final : public Engine {
 public:
  using WeightBuilder = std::function<Weights<W>(double h)>;

  ErkEngine(const ExponentialTableau& tab, Rhs rhs, WeightBuilder builder, std::size_t cache_cap,
            const SchurProblem* schur)
      : tab_(tab), rhs_(std::move(rhs)), builder_(std::move(builder)), cache_cap_(cache_cap),
        schur_(schur) {}

  Vector to_working(const Vector& y) const override {
    return schur_ ? schur_->to_transformed(y) : y;
  }
  Vector to_original(const Vector& y) const override {
    return schur_ ? schur_->from_transformed(y) : y;
  }

  Attempt attempt(double t, const Vector& y, double h, PropagatedRow row) override {
    const Weights<W>& w = weights_for(h);
    const int s = tab_.stage_count();
    stages_.resize(s + 1);
    stages_[0] = eval(t, y);
    Vector yi;
    for (int i = 1; i < s; ++i) {
      yi = apply(w.propagators[i], y);
      for (int j = 0; j < i; ++j) {
        if (w.a[i][j]) add_scaled(yi, h, *w.a[i][j], stages_[j]);
      }
      stages_[i] = eval(t + to_double(tab_.step_fractions[i]) * h, yi);
    }

    const Vector base = apply(w.final_propagator, y);
    std::optional<Vector> embedded;
    if (tab_.embedded_row) {
      embedded = base;
      for (std::size_t j = 0; j < w.b_embedded.size(); ++j) {
        if (w.b_embedded[j]) add_scaled(*embedded, h, *w.b_embedded[j], stages_[j]);
      }
      if (tab_.final_uses_embedded_stage) stages_[s] = eval(t + h, *embedded);
    }
    Vector final = base;
    for (std::size_t j = 0; j < w.b.size(); ++j) {
      if (w.b[j]) add_scaled(final, h, *w.b[j], stages_[j]);
    }

    Attempt out;
    if (row == PropagatedRow::embedded_row && embedded) {
      out.high = std::move(*embedded);
      out.low = std::move(final);
    } else {
      out.high = std::move(final);
      out.low = std::move(embedded);
    }
    return out;
  }

 private:
  Vector eval(double t, const Vector& y) {
    ++stats.f_evaluations;
    return rhs_(t, y);
  }

  const Weights<W>& weights_for(double h) {
    last_attempt_refreshed = false;
    auto it = cache_.find(h);
    if (it != cache_.end()) return it->second;
    if (cache_.size() >= cache_cap_) cache_.clear();
    const auto start = Clock::now();
    Weights<W> w = builder_(h);
    stats.weights_ms += ms_since(start);
    ++stats.weight_refresh_count;
    last_attempt_refreshed = true;
    used_h_.insert(h);
    stats.distinct_step_sizes = static_cast<long>(used_h_.size());
    return cache_.emplace(h, std::move(w)).first->second;
  }

  const ExponentialTableau& tab_;
  Rhs rhs_;
  WeightBuilder builder_;
  std::size_t cache_cap_;
  const SchurProblem* schur_;
  std::map<double, Weights<W>> cache_;
  std::set<double> used_h_;
  std::vector<Vector> stages_;
};

// Everything a run needs, with the Schur factorization owned here so the
// engine can refer to it.
struct EngineBundle {
  std::unique_ptr<SchurProblem> schur;
  std::unique_ptr<Engine> engine;
};

Vector diagonal_of(const LinearPart& linear, Index n) {
  if (const auto* s = std::get_if<Complex>(&linear)) return Vector::Constant(n, *s);
  return std::get<Vector>(linear);
}

EngineBundle make_engine(const IVProblem& problem, const ExponentialTableau& tab,
                         Formulation formulation) {
  problem.validate();
  const Index n = problem.dimension();
  EngineBundle bundle;
  constexpr std::size_t kDiagCache = 256;
  constexpr std::size_t kMatrixCache = 2;

  if (tab.classical) {
    const IVProblem* p = &problem;
    auto rhs = [p](double t, const Vector& y) { return p->full_rhs(t, y); };
    auto builder = [&tab, n](double) { return build_weights(tab, DiagPhiAlgebra(Vector::Zero(n))); };
    bundle.engine =
        std::make_unique<ErkEngine<Vector>>(tab, rhs, builder, kDiagCache, nullptr);
    return bundle;
  }

  if (!problem.has_dense_linear()) {
    const Vector d = diagonal_of(problem.linear, n);
    auto builder = [&tab, d](double h) { return build_weights(tab, DiagPhiAlgebra(-h * d)); };
    bundle.engine = std::make_unique<ErkEngine<Vector>>(tab, problem.nonlinearity, builder,
                                                        kDiagCache, nullptr);
    return bundle;
  }

  if (formulation == Formulation::matrix) {
    const Matrix& l = std::get<Matrix>(problem.linear);
    auto builder = [&tab, &l](double h) { return build_weights(tab, MatrixPhiAlgebra(-h * l)); };
    bundle.engine = std::make_unique<ErkEngine<Matrix>>(tab, problem.nonlinearity, builder,
                                                        kMatrixCache, nullptr);
    return bundle;
  }

  bundle.schur = std::make_unique<SchurProblem>(schur_transform(problem));
  const SchurProblem* sp = bundle.schur.get();
  auto rhs = [sp](double t, const Vector& y) { return sp->transformed_rhs(t, y); };
  auto builder = [&tab, sp](double h) {
    return build_weights(tab, DiagPhiAlgebra(-h * sp->diagonal()));
  };
  bundle.engine = std::make_unique<ErkEngine<Vector>>(tab, rhs, builder, kDiagCache, sp);
  bundle.engine->stats.schur_ms = sp->schur_ms;
  return bundle;
}

void check_finite(const Vector& y, double t) {
  if (!y.allFinite()) {
    std::ostringstream msg;
    msg << "non-finite state produced by the step starting at t = " << t;
    throw InstabilityError(msg.str(), t);
  }
}

// Samples of real problems leave the complex working arithmetic here.
Vector report(const IVProblem& problem, Vector y) {
  if (!problem.real_valued) return y;
  const double scale = std::max(1.0, y.cwiseAbs().maxCoeff());
  const double residue = y.imag().cwiseAbs().maxCoeff();
  if (residue > 1e-10 * scale) {
    std::ostringstream msg;
    msg << "imaginary residue " << residue << " in the state of a real problem";
    throw NumericalError(msg.str());
  }
  return y.real().cast<Complex>();
}

}  // namespace

const char* to_string(Formulation f) { return f == Formulation::matrix ? "matrix" : "vector"; }

Formulation parse_formulation(std::string_view s) {
  if (s == "matrix" || s == "M") return Formulation::matrix;
  if (s == "vector" || s == "V") return Formulation::vector;
  throw std::invalid_argument("unknown formulation '" + std::string(s) + "'");
}

Vector IVProblem::apply_linear(const Vector& y) const {
  return std::visit(
      [&](const auto& l) -> Vector {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, Complex>) {
          return l * y;
        } else if constexpr (std::is_same_v<T, Vector>) {
          return l.cwiseProduct(y);
        } else {
          return l * y;
        }
      },
      linear);
}

Matrix IVProblem::linear_matrix() const {
  const Index n = dimension();
  return std::visit(
      [&](const auto& l) -> Matrix {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, Complex>) {
          return l * Matrix::Identity(n, n);
        } else if constexpr (std::is_same_v<T, Vector>) {
          return l.asDiagonal();
        } else {
          return l;
        }
      },
      linear);
}

Vector IVProblem::full_rhs(double t, const Vector& y) const {
  return nonlinearity(t, y) - apply_linear(y);
}

void IVProblem::validate() const {
  const Index n = dimension();
  if (n == 0) throw DimensionError(name + ": empty initial state");
  if (!nonlinearity) throw DimensionError(name + ": missing nonlinearity");
  if (const auto* d = std::get_if<Vector>(&linear); d && d->size() != n) {
    throw DimensionError(name + ": diagonal linear part has the wrong length");
  }
  if (const auto* m = std::get_if<Matrix>(&linear); m && (m->rows() != n || m->cols() != n)) {
    throw DimensionError(name + ": linear matrix does not match the state dimension");
  }
  if (!(t_end > t0)) throw DimensionError(name + ": t_end must exceed t0");
}

Vector SchurProblem::to_transformed(const Vector& y) const {
  return factorization.u.adjoint() * y;
}

Vector SchurProblem::from_transformed(const Vector& y) const { return factorization.u * y; }

Vector SchurProblem::transformed_rhs(double t, const Vector& y) const {
  const Vector f = base.nonlinearity(t, factorization.u * y);
  Vector g = factorization.u.adjoint() * f;
  g.noalias() -= factorization.s.triangularView<Eigen::StrictlyUpper>() * y;
  return g;
}

SchurProblem schur_transform(const IVProblem& problem) {
  problem.validate();
  const auto start = Clock::now();
  SchurForm f = schur_decompose(problem.linear_matrix());
  const double elapsed = ms_since(start);
  return SchurProblem{problem, std::move(f), elapsed};
}

void StepControl::validate() const {
  if (!(rtol > 0.0) || !(atol > 0.0)) throw std::invalid_argument("tolerances must be positive");
  if (!(0.0 < fac_min && fac_min < 1.0 && fac_max > 1.0)) {
    throw std::invalid_argument("step ratio clamps must satisfy 0 < fac_min < 1 < fac_max");
  }
  if (!(safety > 0.0 && safety <= 1.0)) throw std::invalid_argument("safety must lie in (0, 1]");
  if (!(hold_low <= hold_high)) throw std::invalid_argument("hold band is empty");
  if (!(h_min > 0.0 && h_max > h_min)) throw std::invalid_argument("need 0 < h_min < h_max");
  if (h_init < 0.0) throw std::invalid_argument("h_init must be non-negative");
}

double weighted_rms_error(const Vector& y_prev, const Vector& high, const Vector& low,
                          double rtol, double atol) {
  const Index n = high.size();
  double acc = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double scale = atol + rtol * std::max(std::abs(y_prev(i)), std::abs(high(i)));
    const double e = std::abs(high(i) - low(i)) / scale;
    acc += e * e;
  }
  return std::sqrt(acc / static_cast<double>(n));
}

StepOutput erk_step(const ExponentialTableau& tab, const LinearPart& linear, const Rhs& f,
                    double t, const Vector& y, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("erk_step: h must be positive");
  IVProblem p;
  p.name = "erk_step";
  p.linear = linear;
  p.nonlinearity = f;
  p.y0 = y;
  p.t0 = t;
  p.t_end = t + h;
  p.real_valued = false;
  EngineBundle bundle = make_engine(p, tab, Formulation::matrix);
  Attempt a = bundle.engine->attempt(t, y, h, PropagatedRow::final_row);
  check_finite(a.high, t);
  return StepOutput{std::move(a.high), std::move(a.low)};
}

Vector rk4_step(const IVProblem& problem, double t, const Vector& y, double h) {
  return erk_step(tableau("RK4"), problem.linear, problem.nonlinearity, t, y, h).y;
}

IntegrationResult integrate_fixed(const IVProblem& problem, const ExponentialTableau& tab, double h,
                                  Formulation formulation, const RunOptions& options) {
  if (!(h > 0.0)) throw std::invalid_argument("integrate_fixed: h must be positive");
  if (options.row == PropagatedRow::embedded_row && !tab.embedded_row) {
    throw std::invalid_argument(tab.name + " has no embedded row to propagate");
  }
  const auto wall_start = Clock::now();
  EngineBundle bundle = make_engine(problem, tab, formulation);
  Engine& engine = *bundle.engine;

  const double span = problem.t_end - problem.t0;
  const double ratio = span / h;
  long n_steps = static_cast<long>(std::llround(ratio));
  if (std::abs(ratio - static_cast<double>(n_steps)) > 1e-9 * std::max(1.0, ratio)) {
    n_steps = static_cast<long>(std::ceil(ratio));
  }
  n_steps = std::max(n_steps, 1L);
  if (n_steps > options.max_steps) {
    throw StepBudgetError("integrate_fixed: " + std::to_string(n_steps) +
                              " steps exceed the step budget",
                          problem.t0);
  }

  IntegrationResult result;
  result.samples.push_back({problem.t0, report(problem, problem.y0)});
  Vector y = engine.to_working(problem.y0);
  double t = problem.t0;
  const auto loop_start = Clock::now();
  for (long i = 0; i < n_steps; ++i) {
    const bool last = i + 1 == n_steps;
    const double t_next = last ? problem.t_end : problem.t0 + static_cast<double>(i + 1) * h;
    const double step = last ? std::min(h, problem.t_end - t) : h;
    // A final step that matches h up to rounding reuses the cached weights.
    const double used = std::abs(step - h) <= 1e-9 * h ? h : step;
    Attempt a = engine.attempt(t, y, used, options.row);
    check_finite(a.high, t);
    y = std::move(a.high);
    t = t_next;
    ++engine.stats.steps_accepted;
    if (options.record_trajectory || last) {
      result.samples.push_back({t, report(problem, engine.to_original(y))});
    }
  }
  const double loop_ms = ms_since(loop_start);

  result.stats = engine.stats;
  result.stats.stepping_ms = loop_ms - engine.stats.weights_ms;
  result.stats.wall_ms = ms_since(wall_start);
  return result;
}

IntegrationResult integrate_adaptive(const IVProblem& problem, const ExponentialTableau& tab,
                                     const StepControl& control, Formulation formulation,
                                     const RunOptions& options) {
  control.validate();
  if (!tab.embedded_row) {
    throw std::invalid_argument(tab.name + " has no embedded row; adaptive stepping needs one");
  }
  const auto wall_start = Clock::now();
  EngineBundle bundle = make_engine(problem, tab, formulation);
  Engine& engine = *bundle.engine;

  const double span = problem.t_end - problem.t0;
  const double exponent = -1.0 / (tab.embedded_row->order + 1);
  double h = control.h_init > 0.0 ? control.h_init : 1e-3 * span;
  h = std::clamp(h, control.h_min, control.h_max);

  IntegrationResult result;
  result.samples.push_back({problem.t0, report(problem, problem.y0)});
  Vector y = engine.to_working(problem.y0);
  double t = problem.t0;
  long attempts = 0;
  const auto loop_start = Clock::now();
  while (t < problem.t_end) {
    if (++attempts > control.max_steps) {
      throw StepBudgetError("integrate_adaptive: step budget exhausted", t);
    }
    const double remaining = problem.t_end - t;
    const bool reaches_end = h >= remaining * (1.0 - 1e-12);
    const double step = reaches_end ? remaining : h;

    Attempt a = engine.attempt(t, y, step, options.row);
    const double err = weighted_rms_error(y, a.high, *a.low, control.rtol, control.atol);
    const bool finite = a.high.allFinite() && std::isfinite(err);
    const double proposal =
        err > 0.0 && std::isfinite(err) ? control.safety * std::pow(err, exponent) : control.fac_max;
    const double ratio = std::clamp(proposal, control.fac_min, control.fac_max);
    const bool accepted = finite && err <= 1.0;

    if (options.record_steps) {
      result.steps.push_back({t, step, err, accepted, engine.last_attempt_refreshed});
    }

    if (accepted) {
      y = std::move(a.high);
      t = reaches_end ? problem.t_end : t + step;
      ++engine.stats.steps_accepted;
      if (options.record_trajectory || t >= problem.t_end) {
        result.samples.push_back({t, report(problem, engine.to_original(y))});
      }
      if (!(ratio >= control.hold_low && ratio <= control.hold_high)) h = step * ratio;
      h = std::min(h, control.h_max);
    } else {
      ++engine.stats.steps_rejected;
      h = step * std::min(finite ? ratio : control.fac_min, 1.0);
      if (h < control.h_min) {
        std::ostringstream msg;
        msg << "integrate_adaptive: step size fell below h_min = " << control.h_min
            << " at t = " << t;
        throw StepBudgetError(msg.str(), t);
      }
    }
  }
  const double loop_ms = ms_since(loop_start);

  result.stats = engine.stats;
  result.stats.stepping_ms = loop_ms - engine.stats.weights_ms;
  result.stats.wall_ms = ms_since(wall_start);
  return result;
}

struct ErkStepper::Impl {
  IVProblem problem;
  EngineBundle bundle;
  double t = 0.0;
  Vector y;  // working coordinates
};

ErkStepper::ErkStepper(const IVProblem& problem, const ExponentialTableau& tab,
                       Formulation formulation)
    : impl_(std::make_unique<Impl>()) {
  impl_->problem = problem;
  impl_->bundle = make_engine(impl_->problem, tab, formulation);
  impl_->t = problem.t0;
  impl_->y = impl_->bundle.engine->to_working(problem.y0);
}

ErkStepper::~ErkStepper() = default;
ErkStepper::ErkStepper(ErkStepper&&) noexcept = default;
ErkStepper& ErkStepper::operator=(ErkStepper&&) noexcept = default;

double ErkStepper::time() const { return impl_->t; }

Vector ErkStepper::state() const { return impl_->bundle.engine->to_original(impl_->y); }

void ErkStepper::reset(double t, const Vector& y) {
  if (y.size() != impl_->problem.dimension()) throw DimensionError("ErkStepper::reset: wrong size");
  impl_->t = t;
  impl_->y = impl_->bundle.engine->to_working(y);
}

void ErkStepper::step(double h) {
  if (!(h > 0.0)) throw std::invalid_argument("ErkStepper::step: h must be positive");
  Engine& engine = *impl_->bundle.engine;
  Attempt a = engine.attempt(impl_->t, impl_->y, h, PropagatedRow::final_row);
  check_finite(a.high, impl_->t);
  impl_->y = std::move(a.high);
  impl_->t += h;
  ++engine.stats.steps_accepted;
}

const IntegrationStats& ErkStepper::stats() const { return impl_->bundle.engine->stats; }

}  // namespace schurerk
