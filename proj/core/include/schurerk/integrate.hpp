#pragma once

// Fixed-step and adaptive drivers for y' = F(t, y) - L y.
//
// Exponential tableaux can treat L in two ways:
//   - matrix formulation: phi-function weights of the full matrix -hL;
//   - vector formulation: L = U (D + S) U† is factored once, the system is
//     integrated in Y = U† y with only the diagonal D handled exactly and
//     S Y moved into the explicitly treated right-hand side.
// Classical tableaux (RK4) ignore the formulation and treat L explicitly.

#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "schurerk/matlib.hpp"
#include "schurerk/tableaux.hpp"

namespace schurerk {

/// Scalar, diagonal (stored as its diagonal) or dense linear coefficient L.
using LinearPart = std::variant<Complex, Vector, Matrix>;

using Rhs = std::function<Vector(double t, const Vector& y)>;
using JacobianFn = std::function<Matrix(double t, const Vector& y)>;
using ExactFn = std::function<Vector(double t)>;

enum class Formulation { matrix, vector };

const char* to_string(Formulation f);
Formulation parse_formulation(std::string_view s);

struct IVProblem {
  std::string name;
  LinearPart linear = Complex(0.0);
  /// F(t, y); the full right-hand side is F(t, y) - L y.
  Rhs nonlinearity;
  Vector y0;
  double t0 = 0.0;
  double t_end = 1.0;
  /// Closed-form solution, when known.
  ExactFn exact;
  /// dF/dy, when known analytically.
  JacobianFn jacobian;
  /// Samples of real problems are checked for imaginary residue and reported real.
  bool real_valued = true;

  Eigen::Index dimension() const { return y0.size(); }
  bool has_dense_linear() const { return std::holds_alternative<Matrix>(linear); }

  Vector apply_linear(const Vector& y) const;
  Matrix linear_matrix() const;
  /// F(t, y) - L y
  Vector full_rhs(double t, const Vector& y) const;
  /// Throws DimensionError on inconsistent sizes or a missing F.
  void validate() const;
};

/// The problem rewritten in Y = U† y:  Y' + D Y = U† F(t, U Y) - S Y.
struct SchurProblem {
  IVProblem base;
  SchurForm factorization;
  double schur_ms = 0.0;

  const Vector& diagonal() const { return factorization.d; }
  Vector to_transformed(const Vector& y) const;
  Vector from_transformed(const Vector& y) const;
  /// U† F(t, U Y) - S Y, with S applied as a strictly triangular product.
  Vector transformed_rhs(double t, const Vector& y) const;
};

/// Factor L once. Any linear representation is accepted; scalar and diagonal
/// ones are expanded to a dense matrix first.
SchurProblem schur_transform(const IVProblem& problem);

struct StepControl {
  double rtol = 1e-6;
  double atol = 1e-6;
  double safety = 0.9;
  double fac_min = 0.2;
  double fac_max = 5.0;
  /// Accepted steps whose proposed ratio h_new / h lies in
  /// [hold_low, hold_high] keep h, so the cached weights stay valid.
  /// hold_low < 1 lets a step that passed keep its size instead of shrinking.
  double hold_low = 0.9;
  double hold_high = 2.0;
  /// 0 selects 1e-3 of the integration span.
  double h_init = 0.0;
  double h_min = 1e-12;
  double h_max = std::numeric_limits<double>::infinity();
  long max_steps = 10'000'000;

  /// Throws std::invalid_argument when the constants are inconsistent.
  void validate() const;
};

/// Which tableau row advances the solution.
enum class PropagatedRow { final_row, embedded_row };

struct RunOptions {
  /// Keep every accepted state; otherwise only the initial and final ones.
  bool record_trajectory = true;
  /// Keep a StepRecord for every attempted step (adaptive runs only).
  bool record_steps = false;
  PropagatedRow row = PropagatedRow::final_row;
  long max_steps = 10'000'000;
};

struct Sample {
  double t;
  Vector y;
};

struct StepRecord {
  double t;  // start of the attempted step
  double h;
  double err_norm;
  bool accepted;
  bool weight_refresh;
};

struct IntegrationStats {
  long steps_accepted = 0;
  long steps_rejected = 0;
  long f_evaluations = 0;
  long weight_refresh_count = 0;
  double schur_ms = 0.0;
  double weights_ms = 0.0;
  double stepping_ms = 0.0;
  double wall_ms = 0.0;
  /// Number of distinct step sizes used by accepted and rejected steps.
  long distinct_step_sizes = 0;
};

struct IntegrationResult {
  std::vector<Sample> samples;
  std::vector<StepRecord> steps;
  IntegrationStats stats;

  const Sample& final_sample() const { return samples.back(); }
};

struct StepOutput {
  Vector y;
  std::optional<Vector> embedded;
};

/// One step of `tab` on y' = F(t, y) - L y with weights built from scratch.
/// A dense L uses matrix phi-functions, scalar/diagonal L entrywise ones.
/// Throws InstabilityError when the step produces non-finite values.
StepOutput erk_step(const ExponentialTableau& tab, const LinearPart& linear, const Rhs& f,
                    double t, const Vector& y, double h);

/// Classical RK4 on F(t, y) - L y.
Vector rk4_step(const IVProblem& problem, double t, const Vector& y, double h);

IntegrationResult integrate_fixed(const IVProblem& problem, const ExponentialTableau& tab, double h,
                                  Formulation formulation, const RunOptions& options = {});

IntegrationResult integrate_adaptive(const IVProblem& problem, const ExponentialTableau& tab,
                                     const StepControl& control, Formulation formulation,
                                     const RunOptions& options = {});

/// Step-at-a-time access to the exponential drivers, for callers that need
/// to modify the state between steps (e.g. reorthonormalization).
class ErkStepper {
 public:
  ErkStepper(const IVProblem& problem, const ExponentialTableau& tab, Formulation formulation);
  ~ErkStepper();
  ErkStepper(ErkStepper&&) noexcept;
  ErkStepper& operator=(ErkStepper&&) noexcept;

  double time() const;
  /// Current state in the original coordinates.
  Vector state() const;
  void reset(double t, const Vector& y);
  /// Advance by h with the tableau's final row.
  void step(double h);
  const IntegrationStats& stats() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Weighted RMS norm of (high - low) scaled by atol + rtol max(|y_prev|, |high|).
double weighted_rms_error(const Vector& y_prev, const Vector& high, const Vector& low,
                          double rtol, double atol);

}  // namespace schurerk
