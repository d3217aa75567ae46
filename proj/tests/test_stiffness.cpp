#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "schurerk/errors.hpp"
#include "schurerk/problems.hpp"
#include "schurerk/stiffness.hpp"
#include "support.hpp"

using namespace schurerk;
using schurerk::testing::Gen;

namespace {

IVProblem linear_autonomous(const Matrix& l, const Vector& y0) {
  IVProblem p;
  p.name = "linear";
  p.linear = l;
  p.y0 = y0;
  p.real_valued = false;
  p.nonlinearity = [n = y0.size()](double, const Vector&) { return Vector::Zero(n); };
  return p;
}

std::vector<double> sampled(double (*f)(double), double t0, double dt, int count) {
  std::vector<double> out;
  for (int i = 0; i < count; ++i) out.push_back(f(t0 + i * dt));
  return out;
}

}  // namespace

TEST(StiffnessRatio, Examples) {
  EXPECT_NEAR(stiffness_ratio(Matrix(-system1_matrix())), 3.0, 3e-9);
  EXPECT_NEAR(stiffness_ratio(Matrix(-system2_matrix())), 1000.0, 1e-6);
  EXPECT_DOUBLE_EQ(stiffness_ratio(Complex(20.0)), 1.0);
  Vector d(2);
  d << 0.0, 5.0;
  EXPECT_TRUE(std::isinf(stiffness_ratio(d)));
}

TEST(StiffnessProperty, UnitaryInvariance) {
  Gen gen(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = gen.integer(2, 12);
    Matrix l = gen.matrix(n);
    l += (2.0 * n) * Matrix::Identity(n, n);  // keep Re(lambda) away from zero
    const Matrix u = gen.unitary(n);
    const double a = stiffness_ratio(l);
    const double b = stiffness_ratio(Matrix(u.adjoint() * l * u));
    EXPECT_NEAR(a, b, 1e-9 * a);
  }
}

TEST(FiniteDifferenceJacobian, MatchesAnalytic) {
  Vector y(2);
  y << 0.7, -3.0;
  const auto p = quadratic_system(y);
  const Matrix fd = finite_difference_jacobian(p.nonlinearity, 0.0, y);
  EXPECT_LE(frobenius(fd - p.jacobian(0.0, y)), 1e-7);
}

TEST(Lyapunov, Examples) {
  const auto still = linear_autonomous(Matrix::Zero(2, 2), Vector::Ones(2));
  const auto w0 = local_lyapunov(still, still.y0, 0.0, 0.1);
  EXPECT_LE(w0.gamma.cwiseAbs().maxCoeff(), 1e-12);

  const auto decay = scalar_decay(20.0);
  const auto w1 = local_lyapunov(decay, decay.y0, 0.0, 0.1);
  ASSERT_EQ(w1.gamma.size(), 1);
  EXPECT_NEAR(w1.gamma(0), -20.0, 0.1);

  const auto s2 = system2();
  Gen gen(2);
  for (int trial = 0; trial < 3; ++trial) {
    Vector y(2);
    y << gen.uniform(-3, 3), gen.uniform(-3, 3);
    const auto w = local_lyapunov(s2, y, gen.uniform(0, 5), 0.1);
    EXPECT_NEAR(w.gamma(0), -1.0, 0.01);
    EXPECT_NEAR(w.gamma(1), -1000.0, 10.0);
  }
}

TEST(Lyapunov, Validation) {
  const auto p = system1();
  EXPECT_THROW(local_lyapunov(p, p.y0, 0.0, 0.0), std::invalid_argument);
  EXPECT_THROW(local_lyapunov(p, Vector::Ones(3), 0.0, 0.1), DimensionError);
}

TEST(LyapunovProperty, WindowLengthIndependence) {
  Gen gen(8);
  for (int trial = 0; trial < 4; ++trial) {
    const Eigen::Index n = gen.integer(2, 4);
    Matrix t = gen.strictly_upper(n);
    std::vector<double> rates;
    for (Eigen::Index i = 0; i < n; ++i) {
      rates.push_back(gen.uniform(0.5, 30.0));
      t(i, i) = rates.back();
    }
    const Matrix u = gen.unitary(n);
    const auto p = linear_autonomous(u * t * u.adjoint(), gen.vector(n));
    std::sort(rates.begin(), rates.end());
    for (double tau : {0.05, 0.3, 1.0}) {
      const auto w = local_lyapunov(p, p.y0, 0.0, tau);
      for (Eigen::Index i = 0; i < n; ++i) {
        EXPECT_NEAR(w.gamma(i), -rates[i], 0.01 * rates[i]) << "tau=" << tau;
      }
    }
  }
}

TEST(LyapunovProperty, ScalesWithLinearPart) {
  Gen gen(9);
  const Matrix l = -system1_matrix();
  const auto p1 = linear_autonomous(l, gen.vector(2));
  const auto p10 = linear_autonomous(10.0 * l, p1.y0);
  const auto w1 = local_lyapunov(p1, p1.y0, 0.0, 0.2);
  const auto w10 = local_lyapunov(p10, p10.y0, 0.0, 0.2);
  EXPECT_NEAR(w10.gamma.minCoeff() / w1.gamma.minCoeff(), 10.0, 0.2);
  EXPECT_NEAR(r_nl(w10, 1.0) / r_nl(w1, 1.0), 10.0, 0.2);
}

TEST(Curvature, Examples) {
  const double dt = 1e-3;
  const auto line = curvature(sampled([](double t) { return 3.0 * t - 1.0; }, 0.0, dt, 5), dt);
  for (double k : line) EXPECT_LE(k, 1e-8);

  const double half_pi = std::numbers::pi / 2;
  auto at_peak = curvature(sampled([](double t) { return std::sin(t); }, half_pi - dt, dt, 3), dt);
  ASSERT_EQ(at_peak.size(), 1u);
  EXPECT_NEAR(at_peak[0], 1.0, 1e-6);

  auto at_zero = curvature(sampled([](double t) { return std::sin(t); }, -dt, dt, 3), dt);
  EXPECT_LE(at_zero[0], 1e-8);

  EXPECT_THROW(curvature({1.0, 2.0}, dt), std::invalid_argument);
  EXPECT_THROW(curvature({1.0, 2.0, 3.0}, 0.0), std::invalid_argument);
}

TEST(CurvatureProperty, AffineSeriesHaveNoCurvature) {
  Gen gen(10);
  for (int trial = 0; trial < 50; ++trial) {
    const double a = gen.uniform(-100, 100), b = gen.uniform(-100, 100), dt = gen.log_uniform(1e-4, 1.0);
    std::vector<double> s;
    for (int i = 0; i < 20; ++i) s.push_back(a + b * i * dt);
    for (double k : curvature(s, dt)) EXPECT_LE(k, 1e-8);
  }
}

TEST(RNl, Examples) {
  LyapunovWindow w;
  w.gamma = Eigen::VectorXd(2);
  w.gamma << 0.0, -1000.0;
  EXPECT_DOUBLE_EQ(r_nl(w, 1.0), 1000.0);
  w.gamma << 0.0, 0.0;
  EXPECT_DOUBLE_EQ(r_nl(w, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(r_nl(w, 0.0), 0.0);
  w.gamma << -1.0, -3.0;
  EXPECT_DOUBLE_EQ(r_nl(w, 0.5), 6.0);
  EXPECT_TRUE(std::isinf(r_nl(w, 0.0)));
}

TEST(Probe, LinearFixedCurveOne) {
  const auto p = linear_system2(Vector::Ones(2));
  const auto pts = fixed_curve_probe(p, 1, 1.0, 1e-3);
  ASSERT_EQ(pts.size(), 1u);
  EXPECT_NEAR(pts[0].on_curve.y1, 1.0, 1e-15);
  EXPECT_NEAR(pts[0].on_curve.y2, 2.0, 1e-9);
  EXPECT_NEAR(pts[0].on_curve.f1, 0.0, 1e-9);
}

TEST(Probe, QuadraticFixedCurveTwoRoots) {
  const auto p = quadratic_system(Vector::Zero(2));
  const auto pts = fixed_curve_probe(p, 2, 0.0, 1e-3);
  ASSERT_EQ(pts.size(), 2u);
  std::vector<double> roots{pts[0].on_curve.y2, pts[1].on_curve.y2};
  std::sort(roots.begin(), roots.end());
  EXPECT_NEAR(roots[0], 0.0, 1e-9);
  EXPECT_NEAR(roots[1], 999.0, 1e-9);
  // The origin is an equilibrium, so the on-curve field has no direction.
  const auto& origin = std::abs(pts[0].on_curve.y2) < 1 ? pts[0] : pts[1];
  EXPECT_TRUE(std::isnan(origin.angle_below));
}

TEST(Probe, MisalignmentNearFastCurve) {
  const auto p = linear_system2(Vector::Ones(2));
  const auto pts = fixed_curve_probe(p, 2, 0.1, 1e-3);
  ASSERT_FALSE(pts.empty());
  EXPECT_GT(pts[0].max_angle(), 1.0);
}

TEST(Probe, LocalStiffnessVaries) {
  const auto p = quadratic_system(Vector::Zero(2));
  const auto pts = fixed_curve_probe(p, 2, 0.5, 1e-3);
  ASSERT_EQ(pts.size(), 2u);
  EXPECT_GT(std::abs(pts[0].max_angle() - pts[1].max_angle()), 1e-3);
}

TEST(Probe, Validation) {
  const auto p = linear_system2(Vector::Ones(2));
  EXPECT_THROW(fixed_curve_probe(p, 3, 0.0, 1e-3), std::invalid_argument);
  EXPECT_THROW(fixed_curve_probe(p, 1, 0.0, -1.0), std::invalid_argument);
  EXPECT_THROW(fixed_curve_probe(triangular3_default(), 1, 0.0, 1e-3), DimensionError);
  ProbeOptions narrow;
  narrow.scan_low = 10.0;
  narrow.scan_high = 20.0;
  EXPECT_THROW(fixed_curve_probe(p, 1, 1.0, 1e-3, narrow), NumericalError);
}

TEST(Report, StiffVersusNonstiff) {
  const auto a = stiffness_report(system1());
  const auto b = stiffness_report(system2());
  EXPECT_NEAR(a.ratio, 3.0, 3e-9);
  EXPECT_NEAR(b.ratio, 1000.0, 1e-6);
  ASSERT_EQ(a.windows.size(), b.windows.size());
  for (std::size_t i = 0; i < a.windows.size(); ++i) {
    EXPECT_NEAR(a.windows[i].kappa, b.windows[i].kappa, 1e-6);
    EXPECT_GE(b.windows[i].r_nl / a.windows[i].r_nl, 100.0);
    EXPECT_TRUE(b.windows[i].flagged);
  }
}
