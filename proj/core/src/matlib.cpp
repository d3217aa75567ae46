#include "schurerk/matlib.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Jacobi>

#include "schurerk/errors.hpp"

namespace schurerk {

namespace {

using Eigen::Index;

void require_square(const Matrix& a, const char* who) {
  if (a.rows() != a.cols()) {
    std::ostringstream msg;
    msg << who << ": expected a square matrix, got " << a.rows() << "x" << a.cols();
    throw DimensionError(msg.str());
  }
}

// Eigenvalue of the trailing 2x2 block closest to its bottom-right entry.
Complex wilkinson_shift(const Matrix& t, Index iu) {
  const Complex a = t(iu - 1, iu - 1);
  const Complex b = t(iu - 1, iu);
  const Complex c = t(iu, iu - 1);
  const Complex d = t(iu, iu);
  const double scale = std::abs(a) + std::abs(b) + std::abs(c) + std::abs(d);
  if (scale == 0.0) return d;
  const Complex p = 0.5 * (a - d) / scale;
  const Complex bc = (b / scale) * (c / scale);
  const Complex disc = std::sqrt(p * p + bc);
  // Roots of mu^2 - 2 p mu - bc relative to d; the small one is -bc / large.
  const Complex plus = p + disc;
  const Complex minus = p - disc;
  const Complex large = std::abs(plus) >= std::abs(minus) ? plus : minus;
  if (large == Complex(0.0)) return d;
  return d - scale * bc / large;
}

// x <- c x + conj(s) y, y <- -s x + conj(c) y over `len` entries, the plane
// rotation convention of Eigen::JacobiRotation.
void rotate_pair(Complex* x, Complex* y, Index stride, Index len, Complex c, Complex s) {
  // Plain real arithmetic: std::complex products carry NaN-recovery branches
  // that keep the loop from vectorizing.
  const double cr = c.real(), ci = c.imag(), sr = s.real(), si = s.imag();
  auto* __restrict xd = reinterpret_cast<double*>(x);
  auto* __restrict yd = reinterpret_cast<double*>(y);
  const Index step = 2 * stride;
  if (stride == 1) {
    for (Index k = 0; k < 2 * len; k += 2) {
      const double xr = xd[k], xi = xd[k + 1], yr = yd[k], yi = yd[k + 1];
      xd[k] = cr * xr - ci * xi + sr * yr + si * yi;
      xd[k + 1] = cr * xi + ci * xr + sr * yi - si * yr;
      yd[k] = cr * yr + ci * yi - sr * xr + si * xi;
      yd[k + 1] = cr * yi - ci * yr - sr * xi - si * xr;
    }
    return;
  }
  for (Index k = 0; k < len; ++k) {
    double* xp = xd + k * step;
    double* yp = yd + k * step;
    const double xr = xp[0], xi = xp[1], yr = yp[0], yi = yp[1];
    xp[0] = cr * xr - ci * xi + sr * yr + si * yi;
    xp[1] = cr * xi + ci * xr + sr * yi - si * yr;
    yp[0] = cr * yr + ci * yi - sr * xr + si * xi;
    yp[1] = cr * yi - ci * yr - sr * xi - si * xr;
  }
}

// Same as m.middleCols(col, len).applyOnTheLeft(p, q, j).
void rotate_rows(Matrix& m, Index p, Index q, Index col, Index len,
                 const Eigen::JacobiRotation<Complex>& j) {
  const Index ld = m.outerStride();
  rotate_pair(&m(p, col), &m(q, col), ld, len, j.c(), j.s());
}

// Same as m.middleRows(row, len).applyOnTheRight(p, q, j).
void rotate_cols(Matrix& m, Index p, Index q, Index row, Index len,
                 const Eigen::JacobiRotation<Complex>& j) {
  rotate_pair(&m(row, p), &m(row, q), 1, len, j.c(), -std::conj(j.s()));
}

}  // namespace

double frobenius(const Matrix& a) { return a.norm(); }

bool all_finite(const Matrix& a) {
  for (Index j = 0; j < a.cols(); ++j) {
    for (Index i = 0; i < a.rows(); ++i) {
      if (!std::isfinite(a(i, j).real()) || !std::isfinite(a(i, j).imag())) return false;
    }
  }
  return true;
}

HessenbergForm hessenberg(const Matrix& a) {
  require_square(a, "hessenberg");
  const Index n = a.rows();
  Matrix h = a;
  Matrix q = Matrix::Identity(n, n);

  Vector v;
  Eigen::RowVectorXcd row_work;
  Vector col_work;
  for (Index k = 0; k + 2 < n; ++k) {
    const Index m = n - k - 1;
    // Columns that are already reduced are left alone, so banded or
    // triangular inputs pass through untouched.
    if (h.col(k).tail(m - 1).squaredNorm() == 0.0) continue;

    v = h.col(k).tail(m);
    const double xnorm = v.norm();
    const Complex x0 = v(0);
    const Complex phase = x0 == Complex(0.0) ? Complex(1.0) : x0 / std::abs(x0);
    v(0) += phase * xnorm;
    const double beta = 2.0 / v.squaredNorm();

    auto lower = h.bottomRightCorner(m, n - k);
    row_work.noalias() = v.adjoint() * lower;
    lower.noalias() -= (beta * v) * row_work;

    auto right = h.rightCols(m);
    col_work.noalias() = right * v;
    right.noalias() -= (beta * col_work) * v.adjoint();

    auto qright = q.rightCols(m);
    col_work.noalias() = qright * v;
    qright.noalias() -= (beta * col_work) * v.adjoint();

    h(k + 1, k) = -phase * xnorm;
    h.col(k).tail(m - 1).setZero();
  }
  return {std::move(h), std::move(q)};
}

SchurForm schur_decompose(const Matrix& a, const SchurOptions& options) {
  require_square(a, "schur_decompose");
  if (!all_finite(a)) throw DimensionError("schur_decompose: input has non-finite entries");

  const Index n = a.rows();
  HessenbergForm hf = hessenberg(a);
  Matrix t = std::move(hf.h);
  Matrix u = std::move(hf.q);

  const double eps = options.deflation_eps;
  const double hnorm = t.norm();
  const long budget = static_cast<long>(options.sweeps_per_dimension) * std::max<Index>(n, 1);
  long sweeps = 0;
  int iter = 0;
  Index iu = n - 1;

  auto negligible = [&](Index i) {
    const double sub = std::abs(t(i, i - 1));
    double ref = std::abs(t(i - 1, i - 1)) + std::abs(t(i, i));
    if (ref == 0.0) ref = hnorm;
    return sub <= eps * ref;
  };

  Eigen::JacobiRotation<Complex> rot;
  while (iu > 0) {
    for (Index i = iu; i > 0; --i) {
      if (t(i, i - 1) != Complex(0.0) && negligible(i)) t(i, i - 1) = 0.0;
    }
    while (iu > 0 && t(iu, iu - 1) == Complex(0.0)) {
      --iu;
      iter = 0;
    }
    if (iu == 0) break;

    ++iter;
    if (++sweeps > budget) {
      double residual = 0.0;
      for (Index i = 1; i < n; ++i) residual = std::max(residual, std::abs(t(i, i - 1)));
      std::ostringstream msg;
      msg << "schur_decompose: no convergence after " << budget
          << " QR sweeps (largest subdiagonal " << residual << ")";
      throw ConvergenceError(msg.str(), residual);
    }

    Index il = iu - 1;
    while (il > 0 && t(il, il - 1) != Complex(0.0)) --il;

    Complex shift;
    if (iter % 10 == 0) {
      // Exceptional shift to break stagnation cycles.
      shift = t(iu, iu) + 1.5 * std::abs(t(iu, iu - 1));
    } else {
      shift = wilkinson_shift(t, iu);
    }

    // Rotations touch only the active window [il, iu]; the coupling blocks
    // outside it are rebuilt from U at the end.
    rot.makeGivens(t(il, il) - shift, t(il + 1, il));
    rotate_rows(t, il, il + 1, il, iu - il + 1, rot.adjoint());
    rotate_cols(t, il, il + 1, il, std::min(il + 2, iu) - il + 1, rot);
    rotate_cols(u, il, il + 1, 0, n, rot);

    for (Index i = il + 1; i < iu; ++i) {
      rot.makeGivens(t(i, i - 1), t(i + 1, i - 1), &t(i, i - 1));
      t(i + 1, i - 1) = 0.0;
      rotate_rows(t, i, i + 1, i, iu - i + 1, rot.adjoint());
      rotate_cols(t, i, i + 1, il, std::min(i + 2, iu) - il + 1, rot);
      rotate_cols(u, i, i + 1, 0, n, rot);
    }
  }

  const Vector converged = t.diagonal();
  t.noalias() = u.adjoint() * (a * u);
  t.diagonal() = converged;
  for (Index j = 0; j < n; ++j) {
    for (Index i = j + 1; i < n; ++i) t(i, j) = 0.0;
  }
  auto [d, s] = split_triangular(t);
  return {std::move(u), std::move(t), std::move(d), std::move(s)};
}

std::pair<Vector, Matrix> split_triangular(const Matrix& t) {
  require_square(t, "split_triangular");
  const Index n = t.rows();
  const double tol = 1e-13 * t.norm();
  for (Index j = 0; j < n; ++j) {
    for (Index i = j + 1; i < n; ++i) {
      if (std::abs(t(i, j)) > tol) {
        std::ostringstream msg;
        msg << "split_triangular: entry (" << i << "," << j << ") = " << std::abs(t(i, j))
            << " below the diagonal";
        throw DimensionError(msg.str());
      }
    }
  }
  Vector d = t.diagonal();
  Matrix s = Matrix::Zero(n, n);
  s.triangularView<Eigen::StrictlyUpper>() = t;
  return {std::move(d), std::move(s)};
}

Matrix reconstruct(const SchurForm& f) {
  Matrix t = f.s;
  t.diagonal() += f.d;
  return f.u * t * f.u.adjoint();
}

}  // namespace schurerk
