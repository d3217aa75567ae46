#pragma once

// Test systems with closed-form solutions and method-of-lines builders.
//
// Every problem uses the form y' = F(t, y) - L y, so a textbook system
// y' = A y + g(t) is stored with L = -A.

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "schurerk/integrate.hpp"

namespace schurerk {

/// Coefficient matrix A of the nonstiff 2x2 system, spectrum {-1, -3}.
Matrix system1_matrix();
/// Coefficient matrix A of the stiff 2x2 system, spectrum {-1, -1000}.
Matrix system2_matrix();

/// y' = A1 y + (2 sin t, 2(cos t - sin t)), y(0) = (2, 3).
IVProblem system1(double t_end = 10.0);
/// y' = A2 y + (2 sin t, 999(cos t - sin t)), y(0) = (2, 3).
/// Same exact solution as system1: 2e^{-t}(1, 1) + (sin t, cos t).
IVProblem system2(double t_end = 10.0);

/// y' = A2 y + (y1^2, y2^2). No closed form.
IVProblem quadratic_system(const Vector& y0, double t_end = 1.0);

/// y' = A2 y, the quadratic system with its nonlinear terms removed. The
/// closed form is a sum of the two eigenmodes.
IVProblem linear_system2(const Vector& y0, double t_end = 1.0);

/// y' = -M y with M = [[a, b, c], [0, d, e], [0, 0, f]], a, d, f distinct.
/// Throws std::invalid_argument for repeated diagonal entries.
IVProblem triangular3(double a, double b, double c, double d, double e, double f,
                      const Vector& y0, double t_end = 1.0);

/// triangular3(1, 2, 7, 75, 8, 15, (1, 1, 1)).
IVProblem triangular3_default(double t_end = 1.0);

/// Coefficients (k1, k2, k3) of the closed form of triangular3.
std::array<double, 3> triangular3_constants(double a, double b, double c, double d, double e,
                                            double f, const Vector& y0);

/// Composite Simpson weights (dx/3)(1, 4, 2, ..., 4, 1). Throws
/// std::invalid_argument unless `points` is odd and at least 3.
Eigen::VectorXd simpson_weights(int points, double dx);

/// Negated second-difference matrix on n interior points of (0, 1),
/// homogeneous Dirichlet: rows (-1, 2, -1) / dx^2.
Matrix dirichlet_laplacian(int n);

/// Interior grid x_i = i / (n + 1), i = 1..n.
Eigen::VectorXd interior_grid(int n);

/// y_t - y_xx = int_0^1 y^4 dx + forcing on n interior points (n odd, so
/// Simpson applies over the n + 2 grid points). The forcing is the discrete
/// one that makes x(1 - x)e^t an exact solution of the semidiscrete system.
IVProblem heat_quartic(int n, double t_end = 1.0);

/// The continuous forcing of the quartic heat problem,
/// x(1-x)e^t + 2e^t - e^{4t}/630.
double heat_quartic_continuous_forcing(double x, double t);

/// y_t - y_xx = 1/(1 + y^2) + forcing with exact solution
/// 10x(1 - x)(1 + sin t) + 2 (boundary values 2 folded into the forcing).
IVProblem oscillatory(int n, double t_end = 200.0);

/// y' = -lambda y, y(0) = 1, F = 0.
IVProblem scalar_decay(double lambda = 20.0, double t_end = 1.0);

/// y' = f - L y with constant f, dense L (given), exact via phi-functions.
IVProblem constant_forcing(const Matrix& l, const Vector& f, const Vector& y0,
                           double t_end = 1.0);

struct ProblemParams {
  int grid = 0;              // 0 selects the problem's default
  std::optional<double> t_end;
  std::optional<Vector> y0;  // for problems without a canonical initial state
};

/// Builds a problem by name: system1, system2, quadratic, linear2,
/// triangular3, heat_quartic, oscillatory, scalar_decay.
/// Throws std::invalid_argument for unknown names.
IVProblem make_problem(std::string_view name, const ProblemParams& params = {});

std::vector<std::string> problem_names();

/// max_j ||y'_exact(t_j) - f(t_j, y_exact(t_j))||_inf / (1 + ||y'_exact||_inf)
/// over the given times, with y'_exact from a fourth-order central difference.
double exact_residual(const IVProblem& problem, const std::vector<double>& times);

}  // namespace schurerk
