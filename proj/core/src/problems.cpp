#include "schurerk/problems.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "schurerk/errors.hpp"

namespace schurerk {

namespace {

using Eigen::Index;
using RealVector = Eigen::VectorXd;

Vector vec2(Complex a, Complex b) {
  Vector v(2);
  v << a, b;
  return v;
}

Vector lambert_exact(double t) {
  const double decay = 2.0 * std::exp(-t);
  return vec2(decay + std::sin(t), decay + std::cos(t));
}

Vector lambert_initial() { return vec2(2.0, 3.0); }

// Method-of-lines problem y' = N(y) + forcing(t) + y_xx on the interior grid,
// with the forcing chosen so the grid restriction of `exact` solves it.
struct GridProblem {
  int n;
  Matrix laplacian;  // negated second difference (the stored L)
  std::function<Vector(const Vector&)> nonlinear;
  std::function<Vector(double)> exact;
  std::function<Vector(double)> exact_dt;
};

IVProblem assemble(std::string name, GridProblem g, double t_end, JacobianFn jacobian) {
  auto shared = std::make_shared<const GridProblem>(std::move(g));
  IVProblem p;
  p.name = std::move(name);
  p.linear = shared->laplacian;
  p.nonlinearity = [shared](double t, const Vector& y) -> Vector {
    const Vector ye = shared->exact(t);
    Vector forcing = shared->exact_dt(t) + shared->laplacian * ye - shared->nonlinear(ye);
    return shared->nonlinear(y) + forcing;
  };
  p.y0 = shared->exact(0.0);
  p.t0 = 0.0;
  p.t_end = t_end;
  p.exact = shared->exact;
  p.jacobian = std::move(jacobian);
  return p;
}

void check_grid(int n, const char* who) {
  if (n < 3) throw std::invalid_argument(std::string(who) + ": need at least 3 interior points");
}

}  // namespace

Matrix system1_matrix() {
  Matrix a(2, 2);
  a << -2.0, 1.0, 1.0, -2.0;
  return a;
}

Matrix system2_matrix() {
  Matrix a(2, 2);
  a << -2.0, 1.0, 998.0, -999.0;
  return a;
}

IVProblem system1(double t_end) {
  IVProblem p;
  p.name = "system1";
  p.linear = Matrix(-system1_matrix());
  p.nonlinearity = [](double t, const Vector&) {
    return vec2(2.0 * std::sin(t), 2.0 * (std::cos(t) - std::sin(t)));
  };
  p.y0 = lambert_initial();
  p.t_end = t_end;
  p.exact = lambert_exact;
  p.jacobian = [](double, const Vector&) { return Matrix::Zero(2, 2).eval(); };
  return p;
}

IVProblem system2(double t_end) {
  IVProblem p;
  p.name = "system2";
  p.linear = Matrix(-system2_matrix());
  p.nonlinearity = [](double t, const Vector&) {
    return vec2(2.0 * std::sin(t), 999.0 * (std::cos(t) - std::sin(t)));
  };
  p.y0 = lambert_initial();
  p.t_end = t_end;
  p.exact = lambert_exact;
  p.jacobian = [](double, const Vector&) { return Matrix::Zero(2, 2).eval(); };
  return p;
}

IVProblem quadratic_system(const Vector& y0, double t_end) {
  if (y0.size() != 2) throw DimensionError("quadratic_system: y0 must have 2 entries");
  IVProblem p;
  p.name = "quadratic";
  p.linear = Matrix(-system2_matrix());
  p.nonlinearity = [](double, const Vector& y) { return y.cwiseProduct(y).eval(); };
  p.y0 = y0;
  p.t_end = t_end;
  p.jacobian = [](double, const Vector& y) -> Matrix { return (2.0 * y).asDiagonal(); };
  return p;
}

IVProblem linear_system2(const Vector& y0, double t_end) {
  if (y0.size() != 2) throw DimensionError("linear_system2: y0 must have 2 entries");
  IVProblem p;
  p.name = "linear2";
  p.linear = Matrix(-system2_matrix());
  p.nonlinearity = [](double, const Vector&) { return Vector::Zero(2).eval(); };
  p.y0 = y0;
  p.t_end = t_end;
  p.jacobian = [](double, const Vector&) { return Matrix::Zero(2, 2).eval(); };
  // Eigenvectors (1, 1) for -1 and (1, -998) for -1000.
  const Complex c2 = (y0(0) - y0(1)) / 999.0;
  const Complex c1 = y0(0) - c2;
  p.exact = [c1, c2](double t) {
    const Complex slow = c1 * std::exp(-t);
    const Complex fast = c2 * std::exp(-1000.0 * t);
    Vector y(2);
    y << slow + fast, slow - 998.0 * fast;
    return y;
  };
  return p;
}

std::array<double, 3> triangular3_constants(double a, double b, double c, double d, double e,
                                            double f, const Vector& y0) {
  if (a == d || a == f || d == f) {
    throw std::invalid_argument("triangular3: diagonal entries must be distinct");
  }
  if (y0.size() != 3) throw DimensionError("triangular3: y0 must have 3 entries");
  const double k3 = y0(2).real();
  const double k2 = y0(1).real() - e * k3 / (f - d);
  const double k1 = y0(0).real() -
                    (b * e * k3 / ((f - a) * (f - d)) + b * k2 / (d - a) + c * k3 / (f - a));
  return {k1, k2, k3};
}

IVProblem triangular3(double a, double b, double c, double d, double e, double f,
                      const Vector& y0, double t_end) {
  const auto [k1, k2, k3] = triangular3_constants(a, b, c, d, e, f, y0);
  Matrix m = Matrix::Zero(3, 3);
  m << a, b, c, 0.0, d, e, 0.0, 0.0, f;
  IVProblem p;
  p.name = "triangular3";
  p.linear = m;
  p.nonlinearity = [](double, const Vector&) { return Vector::Zero(3).eval(); };
  p.y0 = y0;
  p.t_end = t_end;
  p.exact = [=](double t) {
    const double ea = std::exp(-a * t), ed = std::exp(-d * t), ef = std::exp(-f * t);
    Vector y(3);
    y(0) = k1 * ea + b * e * k3 * ef / ((f - a) * (f - d)) + b * k2 * ed / (d - a) +
           c * k3 * ef / (f - a);
    y(1) = k2 * ed + e * k3 * ef / (f - d);
    y(2) = k3 * ef;
    return y;
  };
  p.jacobian = [](double, const Vector&) { return Matrix::Zero(3, 3).eval(); };
  return p;
}

IVProblem triangular3_default(double t_end) {
  return triangular3(1, 2, 7, 75, 8, 15, Vector::Ones(3), t_end);
}

RealVector simpson_weights(int points, double dx) {
  if (points < 3 || points % 2 == 0) {
    throw std::invalid_argument("simpson_weights: need an odd number of points, at least 3");
  }
  RealVector w(points);
  for (int i = 0; i < points; ++i) w(i) = (i % 2 == 1) ? 4.0 : 2.0;
  w(0) = w(points - 1) = 1.0;
  return w * (dx / 3.0);
}

Matrix dirichlet_laplacian(int n) {
  const double dx = 1.0 / (n + 1);
  const double inv = 1.0 / (dx * dx);
  Matrix l = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    l(i, i) = 2.0 * inv;
    if (i > 0) l(i, i - 1) = -inv;
    if (i + 1 < n) l(i, i + 1) = -inv;
  }
  return l;
}

RealVector interior_grid(int n) {
  RealVector x(n);
  for (int i = 0; i < n; ++i) x(i) = static_cast<double>(i + 1) / (n + 1);
  return x;
}

IVProblem heat_quartic(int n, double t_end) {
  check_grid(n, "heat_quartic");
  if ((n + 2) % 2 == 0) {
    throw std::invalid_argument("heat_quartic: n must be odd so Simpson covers the n + 2 points");
  }
  const double dx = 1.0 / (n + 1);
  // Boundary samples are zero, so only the interior weights matter.
  const RealVector w = simpson_weights(n + 2, dx).segment(1, n);
  const RealVector x = interior_grid(n);
  const RealVector profile = x.cwiseProduct(RealVector::Ones(n) - x);

  GridProblem g;
  g.n = n;
  g.laplacian = dirichlet_laplacian(n);
  g.nonlinear = [w, n](const Vector& y) {
    const Vector y2 = y.cwiseProduct(y);
    const Complex integral = w.cast<Complex>().dot(y2.cwiseProduct(y2));
    return Vector::Constant(n, integral).eval();
  };
  g.exact = [profile](double t) { return (std::exp(t) * profile).cast<Complex>().eval(); };
  g.exact_dt = g.exact;
  JacobianFn jac = [w, n](double, const Vector& y) -> Matrix {
    const Vector row = 4.0 * w.cast<Complex>().cwiseProduct(y.cwiseProduct(y).cwiseProduct(y));
    return Vector::Ones(n) * row.transpose();
  };
  return assemble("heat_quartic", std::move(g), t_end, std::move(jac));
}

double heat_quartic_continuous_forcing(double x, double t) {
  return x * (1.0 - x) * std::exp(t) + 2.0 * std::exp(t) - std::exp(4.0 * t) / 630.0;
}

IVProblem oscillatory(int n, double t_end) {
  check_grid(n, "oscillatory");
  const RealVector x = interior_grid(n);
  const RealVector bump = 10.0 * x.cwiseProduct(RealVector::Ones(n) - x);

  GridProblem g;
  g.n = n;
  g.laplacian = dirichlet_laplacian(n);
  g.nonlinear = [](const Vector& y) {
    return (Vector::Ones(y.size()).array() / (1.0 + y.array().square())).matrix().eval();
  };
  g.exact = [bump, n](double t) {
    return (bump * (1.0 + std::sin(t)) + RealVector::Constant(n, 2.0)).cast<Complex>().eval();
  };
  g.exact_dt = [bump](double t) { return (bump * std::cos(t)).cast<Complex>().eval(); };
  JacobianFn jac = [](double, const Vector& y) -> Matrix {
    const Vector d = (-2.0 * y.array() / (1.0 + y.array().square()).square()).matrix();
    return d.asDiagonal();
  };
  return assemble("oscillatory", std::move(g), t_end, std::move(jac));
}

IVProblem scalar_decay(double lambda, double t_end) {
  IVProblem p;
  p.name = "scalar_decay";
  p.linear = Complex(lambda);
  p.nonlinearity = [](double, const Vector&) { return Vector::Zero(1).eval(); };
  p.y0 = Vector::Ones(1);
  p.t_end = t_end;
  p.exact = [lambda](double t) { return Vector::Constant(1, std::exp(-lambda * t)).eval(); };
  p.jacobian = [](double, const Vector&) { return Matrix::Zero(1, 1).eval(); };
  return p;
}

IVProblem constant_forcing(const Matrix& l, const Vector& f, const Vector& y0, double t_end) {
  if (l.rows() != l.cols() || l.rows() != f.size() || f.size() != y0.size()) {
    throw DimensionError("constant_forcing: inconsistent sizes");
  }
  IVProblem p;
  p.name = "constant_forcing";
  p.linear = l;
  p.nonlinearity = [f](double, const Vector&) { return f; };
  p.y0 = y0;
  p.t_end = t_end;
  p.exact = [l, f, y0](double t) {
    const auto phis = phi_matrix(1, -t * l);
    return (phis[0] * y0 + t * (phis[1] * f)).eval();
  };
  p.real_valued = false;
  const Index n = l.rows();
  p.jacobian = [n](double, const Vector&) { return Matrix::Zero(n, n).eval(); };
  return p;
}

IVProblem make_problem(std::string_view name, const ProblemParams& params) {
  auto pick = [&](double fallback) { return params.t_end.value_or(fallback); };
  auto grid = [&](int fallback) { return params.grid > 0 ? params.grid : fallback; };
  if (name == "system1") return system1(pick(10.0));
  if (name == "system2") return system2(pick(10.0));
  if (name == "quadratic") return quadratic_system(params.y0.value_or(vec2(0.5, 0.5)), pick(1.0));
  if (name == "linear2") return linear_system2(params.y0.value_or(vec2(1.0, 1.0)), pick(1.0));
  if (name == "triangular3") {
    return triangular3(1, 2, 7, 75, 8, 15, params.y0.value_or(Vector::Ones(3)), pick(1.0));
  }
  if (name == "heat_quartic") return heat_quartic(grid(49), pick(1.0));
  if (name == "oscillatory") return oscillatory(grid(127), pick(200.0));
  if (name == "scalar_decay") return scalar_decay(20.0, pick(1.0));
  throw std::invalid_argument("unknown problem '" + std::string(name) + "'");
}

std::vector<std::string> problem_names() {
  return {"system1",      "system2",      "quadratic",   "linear2",
          "triangular3",  "heat_quartic", "oscillatory", "scalar_decay"};
}

double exact_residual(const IVProblem& problem, const std::vector<double>& times) {
  if (!problem.exact) throw std::invalid_argument(problem.name + " has no closed form");
  double worst = 0.0;
  for (double t : times) {
    const Vector f = problem.full_rhs(t, problem.exact(t));
    // The solution's time scale is unknown here, so take the best of several
    // difference steps.
    double best = std::numeric_limits<double>::infinity();
    for (double d : {1e-2, 1e-3, 1e-4, 1e-5}) {
      const Vector dy = (problem.exact(t - 2 * d) - 8.0 * problem.exact(t - d) +
                         8.0 * problem.exact(t + d) - problem.exact(t + 2 * d)) /
                        (12.0 * d);
      const double scale = 1.0 + dy.cwiseAbs().maxCoeff();
      best = std::min(best, (dy - f).cwiseAbs().maxCoeff() / scale);
    }
    worst = std::max(worst, best);
  }
  return worst;
}

}  // namespace schurerk
