#pragma once

// Dense complex linear algebra: Householder Hessenberg reduction, complex
// Schur decomposition by shifted QR iteration, and the diagonal plus
// strictly-upper split of the triangular factor.

#include <complex>
#include <utility>

#include <Eigen/Dense>

namespace schurerk {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

struct HessenbergForm {
  Matrix h;  // upper Hessenberg
  Matrix q;  // unitary, a = q h q†
};

/// A = U (diag(d) + S) U†.
///
/// `t` holds the full triangular factor; `d` and `s` are its split. Entries of
/// `s` on and below the diagonal are exact zeros.
struct SchurForm {
  Matrix u;
  Matrix t;
  Vector d;
  Matrix s;

  Eigen::Index size() const { return u.rows(); }
};

struct SchurOptions {
  /// Total QR sweeps allowed, as a multiple of the dimension.
  int sweeps_per_dimension = 30;
  /// Relative deflation threshold on subdiagonal entries.
  double deflation_eps = 1e-15;
};

/// Frobenius norm of a complex matrix.
double frobenius(const Matrix& a);

/// True when every entry has finite real and imaginary parts.
bool all_finite(const Matrix& a);

HessenbergForm hessenberg(const Matrix& a);

/// Complex Schur decomposition via Hessenberg reduction followed by
/// single-shift QR sweeps (Wilkinson shift, implicit bulge chase).
///
/// Eigenvalues appear on the diagonal of `t` in whatever order the
/// iteration deflates them; no reordering is attempted.
///
/// Throws DimensionError for a non-square or non-finite input and
/// ConvergenceError when the sweep budget runs out.
SchurForm schur_decompose(const Matrix& a, const SchurOptions& options = {});

/// Split an upper-triangular matrix into its diagonal and strictly upper
/// part. Throws DimensionError if the strictly lower part holds anything
/// larger than 1e-13 * ||t||_F.
std::pair<Vector, Matrix> split_triangular(const Matrix& t);

/// U (diag(d) + S) U†
Matrix reconstruct(const SchurForm& f);

}  // namespace schurerk
