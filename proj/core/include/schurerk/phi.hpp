#pragma once

// The phi-function family phi_0(z) = e^z, phi_{k+1}(z) = (phi_k(z) - 1/k!) / z,
// phi_k(0) = 1/k!, for scalar, diagonal and dense matrix arguments.

#include <array>
#include <vector>

#include "schurerk/matlib.hpp"

namespace schurerk {

inline constexpr int kMaxScalarPhiOrder = 8;
inline constexpr int kMaxMatrixPhiOrder = 3;

/// |z| below which phi_k is summed from its Taylor series instead of the
/// upward recurrence from exp(z).
double phi_taylor_radius(int k);

/// Truncated Taylor series sum_j z^j / (j+k)!, terms until they drop below
/// 1e-20 of the running sum (at most 40 terms).
Complex phi_taylor(int k, Complex z);

/// Upward recurrence from exp(z). Cancels badly near z = 0.
Complex phi_recurrence(int k, Complex z);

/// phi_k(z), k <= 8. Throws std::out_of_range for other k.
Complex phi_scalar(int k, Complex z);

/// phi_0(z) ... phi_3(z) in one pass.
std::array<Complex, kMaxMatrixPhiOrder + 1> phi_scalars(Complex z);

/// Entry i is phi_k(scale * d_i).
Vector phi_diag(int k, const Vector& d, double scale);

/// Matrix exponential: scaling and squaring around a degree-13 Padé
/// approximant. Throws NumericalError when the result overflows.
Matrix expm(const Matrix& a);

/// phi_0(a) ... phi_kmax(a), kmax <= 3, read off the first block row of the
/// exponential of the block matrix
///
///     [ a  I  0 ... ]
///     [ 0  0  I ... ]
///     [ ...       I ]
///     [ 0  ...    0 ]
///
/// so singular `a` needs no special treatment.
std::vector<Matrix> phi_matrix(int kmax, const Matrix& a);

}  // namespace schurerk
