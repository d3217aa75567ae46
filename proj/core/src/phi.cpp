#include "schurerk/phi.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "schurerk/errors.hpp"

namespace schurerk {

namespace {

using Eigen::Index;

void check_order(int k, int kmax) {
  if (k < 0 || k > kmax) {
    throw std::out_of_range("phi order " + std::to_string(k) + " outside [0, " +
                            std::to_string(kmax) + "]");
  }
}

double inverse_factorial(int k) {
  double f = 1.0;
  for (int j = 2; j <= k; ++j) f /= j;
  return f;
}

// Degree-13 Padé coefficients for exp, divided by the constant term so that
// expm(0) comes out as the identity without rounding.
constexpr std::array<double, 14> kPade13 = [] {
  std::array<double, 14> b = {
      64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
      129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
      1323241920.0,        40840800.0,          960960.0,           16380.0,
      182.0,               1.0};
  const double b0 = b[0];
  for (auto& c : b) c /= b0;
  return b;
}();
constexpr double kPade13Theta = 5.4;

// Block upper-triangular matrix of the form
//
//     [ X0  X1 ... XK ]
//     [ 0   c ⊗ I     ]
//
// with general n-by-n blocks in the first block row and a K-by-K scalar
// upper-triangular tail acting as multiples of the identity. Closed under
// products, sums and inverses, so the Padé evaluation never leaves it.
struct AugmentedPhi {
  std::vector<Matrix> row;
  Matrix tail;

  Index order() const { return static_cast<Index>(row.size()) - 1; }
  Index n() const { return row.front().rows(); }
};

AugmentedPhi operator*(const AugmentedPhi& x, const AugmentedPhi& y) {
  const Index k = x.order();
  AugmentedPhi z;
  z.row.resize(k + 1);
  z.row[0].noalias() = x.row[0] * y.row[0];
  for (Index j = 1; j <= k; ++j) {
    z.row[j].noalias() = x.row[0] * y.row[j];
    for (Index i = 1; i <= k; ++i) {
      const Complex c = y.tail(i - 1, j - 1);
      if (c != Complex(0.0)) z.row[j] += c * x.row[i];
    }
  }
  z.tail = x.tail * y.tail;
  return z;
}

AugmentedPhi operator+(const AugmentedPhi& x, const AugmentedPhi& y) {
  AugmentedPhi z = x;
  for (std::size_t j = 0; j < z.row.size(); ++j) z.row[j] += y.row[j];
  z.tail += y.tail;
  return z;
}

AugmentedPhi operator-(const AugmentedPhi& x, const AugmentedPhi& y) {
  AugmentedPhi z = x;
  for (std::size_t j = 0; j < z.row.size(); ++j) z.row[j] -= y.row[j];
  z.tail -= y.tail;
  return z;
}

AugmentedPhi operator*(double c, const AugmentedPhi& x) {
  AugmentedPhi z = x;
  for (auto& b : z.row) b *= c;
  z.tail *= c;
  return z;
}

void add_identity(Matrix& x, double c) { x.diagonal().array() += c; }

void add_identity(AugmentedPhi& x, double c) {
  add_identity(x.row[0], c);
  x.tail.diagonal().array() += c;
}

double one_norm(const Matrix& x) { return x.cwiseAbs().colwise().sum().maxCoeff(); }

double one_norm(const AugmentedPhi& x) {
  double best = one_norm(x.row[0]);
  for (Index j = 1; j <= x.order(); ++j) {
    const double tail_col = x.tail.col(j - 1).cwiseAbs().sum();
    best = std::max(best, x.row[j].cwiseAbs().colwise().sum().maxCoeff() + tail_col);
  }
  return best;
}

Matrix solve(const Matrix& p, const Matrix& q) { return p.partialPivLu().solve(q); }

AugmentedPhi solve(const AugmentedPhi& p, const AugmentedPhi& q) {
  const Index k = p.order();
  AugmentedPhi x;
  x.tail = p.tail.triangularView<Eigen::Upper>().solve(q.tail);
  const Eigen::PartialPivLU<Matrix> lu(p.row[0]);
  x.row.resize(k + 1);
  x.row[0] = lu.solve(q.row[0]);
  for (Index j = 1; j <= k; ++j) {
    Matrix rhs = q.row[j];
    for (Index i = 1; i <= k; ++i) {
      const Complex c = x.tail(i - 1, j - 1);
      if (c != Complex(0.0)) rhs -= c * p.row[i];
    }
    x.row[j] = lu.solve(rhs);
  }
  return x;
}

bool finite(const Matrix& x) { return all_finite(x); }

bool finite(const AugmentedPhi& x) {
  return std::all_of(x.row.begin(), x.row.end(), [](const Matrix& b) { return all_finite(b); });
}

template <class M>
M scale_and_square_exp(M a) {
  const double norm = one_norm(a);
  if (!std::isfinite(norm)) throw NumericalError("expm: input norm is not finite");
  int squarings = 0;
  if (norm > kPade13Theta) {
    squarings = static_cast<int>(std::ceil(std::log2(norm / kPade13Theta)));
    a = std::ldexp(1.0, -squarings) * a;
  }
  const auto& b = kPade13;
  const M a2 = a * a;
  const M a4 = a2 * a2;
  const M a6 = a4 * a2;

  M u_inner = b[13] * a6 + b[11] * a4 + b[9] * a2;
  u_inner = a6 * u_inner;
  u_inner = u_inner + b[7] * a6 + b[5] * a4 + b[3] * a2;
  add_identity(u_inner, b[1]);
  const M u = a * u_inner;

  M v = b[12] * a6 + b[10] * a4 + b[8] * a2;
  v = a6 * v;
  v = v + b[6] * a6 + b[4] * a4 + b[2] * a2;
  add_identity(v, b[0]);

  M r = solve(v - u, v + u);
  for (int s = 0; s < squarings; ++s) r = r * r;
  if (!finite(r)) throw NumericalError("expm: result overflowed");
  return r;
}

}  // namespace

double phi_taylor_radius(int k) { return std::max(0.5, 0.5 * k); }

Complex phi_taylor(int k, Complex z) {
  check_order(k, kMaxScalarPhiOrder);
  Complex term = inverse_factorial(k);
  Complex sum = term;
  for (int j = 1; j < 40; ++j) {
    term *= z / static_cast<double>(j + k);
    sum += term;
    if (std::abs(term) < 1e-20 * std::abs(sum)) break;
  }
  return sum;
}

Complex phi_recurrence(int k, Complex z) {
  check_order(k, kMaxScalarPhiOrder);
  Complex p = std::exp(z);
  double inv_fact = 1.0;
  for (int j = 0; j < k; ++j) {
    p = (p - inv_fact) / z;
    inv_fact /= (j + 1);
  }
  return p;
}

Complex phi_scalar(int k, Complex z) {
  check_order(k, kMaxScalarPhiOrder);
  if (k == 0) return std::exp(z);
  if (std::abs(z) < phi_taylor_radius(k)) return phi_taylor(k, z);
  return phi_recurrence(k, z);
}

std::array<Complex, kMaxMatrixPhiOrder + 1> phi_scalars(Complex z) {
  std::array<Complex, kMaxMatrixPhiOrder + 1> out;
  for (int k = 0; k <= kMaxMatrixPhiOrder; ++k) out[k] = phi_scalar(k, z);
  return out;
}

Vector phi_diag(int k, const Vector& d, double scale) {
  check_order(k, kMaxScalarPhiOrder);
  Vector out(d.size());
  for (Index i = 0; i < d.size(); ++i) out(i) = phi_scalar(k, scale * d(i));
  return out;
}

Matrix expm(const Matrix& a) {
  if (a.rows() != a.cols()) throw DimensionError("expm: expected a square matrix");
  if (a.size() == 0) return a;
  return scale_and_square_exp(a);
}

std::vector<Matrix> phi_matrix(int kmax, const Matrix& a) {
  check_order(kmax, kMaxMatrixPhiOrder);
  if (a.rows() != a.cols()) throw DimensionError("phi_matrix: expected a square matrix");
  const Index n = a.rows();
  if (kmax == 0) return {expm(a)};

  AugmentedPhi b;
  b.row.assign(kmax + 1, Matrix::Zero(n, n));
  b.row[0] = a;
  b.row[1] = Matrix::Identity(n, n);
  b.tail = Matrix::Zero(kmax, kmax);
  for (Index i = 0; i + 1 < kmax; ++i) b.tail(i, i + 1) = 1.0;

  AugmentedPhi e = scale_and_square_exp(std::move(b));
  return std::move(e.row);
}

}  // namespace schurerk
