#pragma once

// Stiffness diagnostics: stiffness ratio of L, local Lyapunov exponents,
// curvature of a scalar time series, the ratio R_nl = |gamma_min| / kappa,
// and slope-field probes across the fixed curves of 2-D systems.

#include <algorithm>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "schurerk/integrate.hpp"

namespace schurerk {

/// max |Re lambda| / min |Re lambda| over the spectrum of L. Returns +inf when
/// some |Re lambda| <= 1e-12.
double stiffness_ratio(const LinearPart& linear);

struct LyapunovWindow {
  double t = 0.0;
  double tau = 0.0;
  Eigen::VectorXd gamma;  // sorted descending
};

struct LyapunovOptions {
  int substeps = 200;
  /// Tableau used for the trajectory and its variational equation.
  std::string method = "ERK4HO5";
};

/// dF/dy by central differences with step max(1e-7, 1e-7 |y_i|).
Matrix finite_difference_jacobian(const Rhs& f, double t, const Vector& y);

/// Local exponents over [t, t + tau] from the variational equation
/// v' = (dF/dy - L) v integrated next to the trajectory through (t, y), with
/// the tangent frame reorthonormalized by QR after every substep.
///
/// The starting frame spans the leading invariant subspaces of the Jacobian
/// at (t, y), so constant-Jacobian systems show no alignment transient.
/// Throws InstabilityError if the trajectory blows up inside the window.
LyapunovWindow local_lyapunov(const IVProblem& problem, const Vector& y, double t, double tau,
                              const LyapunovOptions& options = {});

/// |kappa| = |y''| (1 + y'^2)^{-3/2} at every interior sample, with centered
/// differences on uniform spacing dt. Throws std::invalid_argument for fewer
/// than 3 samples or dt <= 0.
std::vector<double> curvature(const std::vector<double>& samples, double dt);

/// max(0, -min gamma) / kappa; +inf when kappa == 0 and the numerator is
/// positive, 0 when both vanish.
double r_nl(const LyapunovWindow& window, double kappa);

struct ProbeSample {
  double y1 = 0.0;
  double y2 = 0.0;
  double f1 = 0.0;
  double f2 = 0.0;
};

struct ProbePoint {
  ProbeSample on_curve;
  ProbeSample below;  // free coordinate - epsilon
  ProbeSample above;  // free coordinate + epsilon
  /// Radians between the field on the curve and off it; NaN when either
  /// vector vanishes (e.g. at an equilibrium).
  double angle_below = 0.0;
  double angle_above = 0.0;

  double max_angle() const { return std::max(angle_below, angle_above); }
};

struct ProbeOptions {
  /// Coordinate solved for; the other one is held at the probed value.
  int free_coordinate = 2;
  double scan_low = -2000.0;
  double scan_high = 2000.0;
  int scan_points = 40001;
};

/// Fixed curve C_k: {f_k(y) = 0} of a 2-D autonomous field. Holds the other
/// coordinate at `fixed_value`, finds every root of f_k along the free
/// coordinate inside the scan range (bracketed, then refined with TOMS 748),
/// and measures the field misalignment at +-epsilon across the curve.
/// Throws NumericalError when no root exists in the scan range.
std::vector<ProbePoint> fixed_curve_probe(const IVProblem& problem, int component,
                                          double fixed_value, double epsilon,
                                          const ProbeOptions& options = {});

struct StiffnessWindow {
  LyapunovWindow lyapunov;
  double kappa = 0.0;
  double r_nl = 0.0;
  bool flagged = false;  // r_nl above the report threshold
};

struct StiffnessReport {
  double ratio = 0.0;
  std::vector<StiffnessWindow> windows;
  double threshold = 100.0;
};

struct ReportOptions {
  int windows = 10;
  double tau = 0.1;
  /// Component whose curvature enters R_nl (0-based).
  int component = 0;
  double threshold = 100.0;
  LyapunovOptions lyapunov;
};

/// Windows start at t0 + j tau, j = 1..windows. States come from the closed
/// form when the problem has one and from a fixed-step run otherwise.
StiffnessReport stiffness_report(const IVProblem& problem, const ReportOptions& options = {});

}  // namespace schurerk
