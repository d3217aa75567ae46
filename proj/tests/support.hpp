#pragma once

// Random inputs for the property tests. Everything is drawn from a seeded
// mt19937_64 so failures reproduce.

#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "schurerk/matlib.hpp"

namespace schurerk::testing {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }
  Complex complex_normal() { return {normal(), normal()}; }

  /// 10^u with u uniform in [log10 lo, log10 hi].
  double log_uniform(double lo, double hi) {
    return std::pow(10.0, uniform(std::log10(lo), std::log10(hi)));
  }

  Matrix matrix(Eigen::Index n) {
    Matrix a(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < n; ++i) a(i, j) = complex_normal();
    return a;
  }

  Matrix real_matrix(Eigen::Index n) {
    Matrix a(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < n; ++i) a(i, j) = normal();
    return a;
  }

  Vector vector(Eigen::Index n) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = complex_normal();
    return v;
  }

  Matrix unitary(Eigen::Index n) {
    Eigen::HouseholderQR<Matrix> qr(matrix(n));
    return qr.householderQ() * Matrix::Identity(n, n);
  }

  /// V diag(lambda) V† with V unitary.
  Matrix normal_matrix(Eigen::Index n) {
    const Matrix v = unitary(n);
    return v * vector(n).asDiagonal() * v.adjoint();
  }

  /// Strictly upper triangular m x m with entries in [-1, 1].
  Matrix strictly_upper(Eigen::Index m) {
    Matrix s = Matrix::Zero(m, m);
    for (Eigen::Index j = 1; j < m; ++j)
      for (Eigen::Index i = 0; i < j; ++i) s(i, j) = uniform(-1.0, 1.0);
    return s;
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

inline double max_abs(const Matrix& a) { return a.cwiseAbs().maxCoeff(); }
inline double max_abs(const Vector& a) { return a.cwiseAbs().maxCoeff(); }

}  // namespace schurerk::testing
