#include "schurerk/stiffness.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include <boost/math/tools/toms748_solve.hpp>

#include "schurerk/errors.hpp"
#include "schurerk/matlib.hpp"

namespace schurerk {

namespace {

using Eigen::Index;

constexpr double kInf = std::numeric_limits<double>::infinity();

Vector spectrum(const LinearPart& linear) {
  if (const auto* s = std::get_if<Complex>(&linear)) return Vector::Constant(1, *s);
  if (const auto* d = std::get_if<Vector>(&linear)) return *d;
  return schur_decompose(std::get<Matrix>(linear)).d;
}

// Orthonormal frame whose leading k columns span the invariant subspace of
// the k eigenvalues of `j` with largest real part.
Matrix leading_invariant_frame(const Matrix& j) {
  const Index n = j.rows();
  const SchurForm f = schur_decompose(j);
  const double floor = 1e-14 * std::max(1.0, frobenius(f.t));
  Matrix vecs = Matrix::Zero(n, n);
  for (Index k = 0; k < n; ++k) {
    const Complex lambda = f.t(k, k);
    Vector x = Vector::Zero(n);
    x(k) = 1.0;
    for (Index i = k - 1; i >= 0; --i) {
      Complex acc = 0.0;
      for (Index m = i + 1; m <= k; ++m) acc += f.t(i, m) * x(m);
      Complex denom = f.t(i, i) - lambda;
      if (std::abs(denom) < floor) denom = floor;
      x(i) = -acc / denom;
    }
    vecs.col(k) = f.u * x;
  }
  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return f.t(a, a).real() > f.t(b, b).real(); });
  Matrix sorted(n, n);
  for (Index k = 0; k < n; ++k) sorted.col(k) = vecs.col(order[k]);
  const Eigen::HouseholderQR<Matrix> qr(sorted);
  return qr.householderQ() * Matrix::Identity(n, n);
}

JacobianFn jacobian_of(const IVProblem& problem) {
  if (problem.jacobian) return problem.jacobian;
  Rhs f = problem.nonlinearity;
  return [f](double t, const Vector& y) { return finite_difference_jacobian(f, t, y); };
}

double angle_between(const ProbeSample& a, const ProbeSample& b) {
  const double na = std::hypot(a.f1, a.f2);
  const double nb = std::hypot(b.f1, b.f2);
  if (na == 0.0 || nb == 0.0) return std::numeric_limits<double>::quiet_NaN();
  const double c = std::clamp((a.f1 * b.f1 + a.f2 * b.f2) / (na * nb), -1.0, 1.0);
  return std::acos(c);
}

}  // namespace

double stiffness_ratio(const LinearPart& linear) {
  const Vector d = spectrum(linear);
  double lo = kInf, hi = 0.0;
  for (Index i = 0; i < d.size(); ++i) {
    const double r = std::abs(d(i).real());
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  if (lo <= 1e-12) return kInf;
  return hi / lo;
}

Matrix finite_difference_jacobian(const Rhs& f, double t, const Vector& y) {
  const Index n = y.size();
  Matrix j(n, n);
  Vector probe = y;
  for (Index i = 0; i < n; ++i) {
    const double step = std::max(1e-7, 1e-7 * std::abs(y(i)));
    probe(i) = y(i) + step;
    const Vector fp = f(t, probe);
    probe(i) = y(i) - step;
    const Vector fm = f(t, probe);
    probe(i) = y(i);
    j.col(i) = (fp - fm) / (2.0 * step);
  }
  return j;
}

LyapunovWindow local_lyapunov(const IVProblem& problem, const Vector& y, double t, double tau,
                              const LyapunovOptions& options) {
  if (!(tau > 0.0)) throw std::invalid_argument("local_lyapunov: tau must be positive");
  if (options.substeps < 1) throw std::invalid_argument("local_lyapunov: substeps must be >= 1");
  problem.validate();
  const Index n = problem.dimension();
  if (y.size() != n) throw DimensionError("local_lyapunov: state has the wrong size");

  const Matrix l = problem.linear_matrix();
  const JacobianFn jac = jacobian_of(problem);
  const Matrix frame = leading_invariant_frame(jac(t, y) - l);

  // Trajectory and tangent frame both live in the Schur coordinates of L, so
  // only the diagonal of L is treated exactly.
  const auto schur = std::make_shared<const SchurForm>(schur_decompose(l));
  const Rhs f = problem.nonlinearity;

  IVProblem aug;
  aug.name = problem.name + "/variational";
  aug.real_valued = false;
  aug.t0 = t;
  aug.t_end = t + tau;
  Vector d(n * (n + 1));
  for (Index b = 0; b <= n; ++b) d.segment(b * n, n) = schur->d;
  aug.linear = d;
  aug.y0.resize(n * (n + 1));
  aug.y0.head(n) = schur->u.adjoint() * y;
  {
    const Matrix v0 = schur->u.adjoint() * frame;
    aug.y0.tail(n * n) = Eigen::Map<const Vector>(v0.data(), n * n);
  }
  aug.nonlinearity = [schur, f, jac, n](double tt, const Vector& z) {
    const auto& u = schur->u;
    const auto upper = schur->s.triangularView<Eigen::StrictlyUpper>();
    const Vector w = z.head(n);
    const Vector yy = u * w;
    Vector out(n * (n + 1));
    Vector g = u.adjoint() * f(tt, yy);
    g.noalias() -= upper * w;
    out.head(n) = g;
    const Eigen::Map<const Matrix> v(z.data() + n, n, n);
    Matrix dv = u.adjoint() * (jac(tt, yy) * (u * v));
    dv.noalias() -= upper * v;
    out.tail(n * n) = Eigen::Map<const Vector>(dv.data(), n * n);
    return out;
  };

  ErkStepper stepper(aug, tableau(options.method), Formulation::vector);
  const double h = tau / options.substeps;
  Eigen::VectorXd log_growth = Eigen::VectorXd::Zero(n);
  Vector z = aug.y0;
  for (int s = 0; s < options.substeps; ++s) {
    stepper.step(h);
    z = stepper.state();
    const Eigen::Map<const Matrix> v(z.data() + n, n, n);
    const Eigen::HouseholderQR<Matrix> qr(v);
    for (Index i = 0; i < n; ++i) {
      const double r = std::abs(qr.matrixQR()(i, i));
      if (!(r > 0.0) || !std::isfinite(r)) {
        throw InstabilityError("local_lyapunov: tangent frame degenerated", stepper.time());
      }
      log_growth(i) += std::log(r);
    }
    const Matrix q = qr.householderQ() * Matrix::Identity(n, n);
    z.tail(n * n) = Eigen::Map<const Vector>(q.data(), n * n);
    stepper.reset(stepper.time(), z);
  }

  LyapunovWindow out;
  out.t = t;
  out.tau = tau;
  out.gamma = log_growth / tau;
  std::sort(out.gamma.data(), out.gamma.data() + n, std::greater<>());
  return out;
}

std::vector<double> curvature(const std::vector<double>& samples, double dt) {
  if (samples.size() < 3) throw std::invalid_argument("curvature: need at least 3 samples");
  if (!(dt > 0.0)) throw std::invalid_argument("curvature: spacing must be positive");
  std::vector<double> out;
  out.reserve(samples.size() - 2);
  for (std::size_t i = 1; i + 1 < samples.size(); ++i) {
    const double d1 = (samples[i + 1] - samples[i - 1]) / (2.0 * dt);
    const double d2 = (samples[i + 1] - 2.0 * samples[i] + samples[i - 1]) / (dt * dt);
    out.push_back(std::abs(d2) * std::pow(1.0 + d1 * d1, -1.5));
  }
  return out;
}

double r_nl(const LyapunovWindow& window, double kappa) {
  if (window.gamma.size() == 0) throw std::invalid_argument("r_nl: empty exponent set");
  const double rate = std::max(0.0, -window.gamma.minCoeff());
  if (kappa == 0.0) return rate > 0.0 ? kInf : 0.0;
  return rate / std::abs(kappa);
}

std::vector<ProbePoint> fixed_curve_probe(const IVProblem& problem, int component,
                                          double fixed_value, double epsilon,
                                          const ProbeOptions& options) {
  if (problem.dimension() != 2) throw DimensionError("fixed_curve_probe: needs a 2-D system");
  if (component != 1 && component != 2) {
    throw std::invalid_argument("fixed_curve_probe: component must be 1 or 2");
  }
  if (options.free_coordinate != 1 && options.free_coordinate != 2) {
    throw std::invalid_argument("fixed_curve_probe: free coordinate must be 1 or 2");
  }
  if (!(epsilon > 0.0)) throw std::invalid_argument("fixed_curve_probe: epsilon must be positive");
  if (options.scan_points < 2 || !(options.scan_high > options.scan_low)) {
    throw std::invalid_argument("fixed_curve_probe: invalid scan range");
  }

  const int free = options.free_coordinate - 1;
  auto sample = [&](double value) {
    Vector y(2);
    y(free) = value;
    y(1 - free) = fixed_value;
    const Vector f = problem.full_rhs(problem.t0, y);
    return ProbeSample{y(0).real(), y(1).real(), f(0).real(), f(1).real()};
  };
  auto residual = [&](double value) {
    const ProbeSample s = sample(value);
    return component == 1 ? s.f1 : s.f2;
  };

  std::vector<double> roots;
  const double step = (options.scan_high - options.scan_low) / (options.scan_points - 1);
  double x_prev = options.scan_low;
  double r_prev = residual(x_prev);
  for (int i = 1; i < options.scan_points; ++i) {
    const double x = options.scan_low + i * step;
    const double r = residual(x);
    if (r_prev == 0.0) {
      roots.push_back(x_prev);
    } else if (r != 0.0 && (r_prev < 0.0) != (r < 0.0)) {
      boost::uintmax_t iters = 100;
      const auto bracket = boost::math::tools::toms748_solve(
          residual, x_prev, x, r_prev, r, boost::math::tools::eps_tolerance<double>(52), iters);
      roots.push_back(0.5 * (bracket.first + bracket.second));
    }
    x_prev = x;
    r_prev = r;
  }
  if (r_prev == 0.0) roots.push_back(x_prev);
  if (roots.empty()) {
    throw NumericalError("fixed_curve_probe: no root of the fixed-curve equation in the scan range");
  }

  std::vector<ProbePoint> out;
  for (double root : roots) {
    ProbePoint p;
    p.on_curve = sample(root);
    p.below = sample(root - epsilon);
    p.above = sample(root + epsilon);
    p.angle_below = angle_between(p.on_curve, p.below);
    p.angle_above = angle_between(p.on_curve, p.above);
    out.push_back(p);
  }
  return out;
}

StiffnessReport stiffness_report(const IVProblem& problem, const ReportOptions& options) {
  if (options.windows < 1) throw std::invalid_argument("stiffness_report: need a window");
  if (options.component < 0 || options.component >= problem.dimension()) {
    throw std::invalid_argument("stiffness_report: component out of range");
  }
  const double h = options.tau / options.lyapunov.substeps;
  const double t_last = problem.t0 + (options.windows + 1) * options.tau;

  std::function<Vector(double)> state;
  IntegrationResult run;
  if (problem.exact) {
    state = problem.exact;
  } else {
    IVProblem p = problem;
    p.t_end = t_last;
    run = integrate_fixed(p, tableau(options.lyapunov.method), h, Formulation::vector);
    state = [&run, &problem, h](double t) {
      const auto i = static_cast<std::size_t>(std::llround((t - problem.t0) / h));
      return run.samples.at(i).y;
    };
  }

  StiffnessReport report;
  report.ratio = stiffness_ratio(problem.linear);
  report.threshold = options.threshold;
  for (int j = 1; j <= options.windows; ++j) {
    const double t = problem.t0 + j * options.tau;
    StiffnessWindow w;
    w.lyapunov = local_lyapunov(problem, state(t), t, options.tau, options.lyapunov);
    const auto c = options.component;
    const std::vector<double> ys = {state(t - h)(c).real(), state(t)(c).real(),
                                    state(t + h)(c).real()};
    w.kappa = curvature(ys, h).front();
    w.r_nl = r_nl(w.lyapunov, w.kappa);
    w.flagged = w.r_nl > options.threshold;
    report.windows.push_back(std::move(w));
  }
  return report;
}

}  // namespace schurerk
