#pragma once

// Exponential Runge-Kutta tableaux stored as exact expression trees over
// phi_k(s * z), z = -hL, so each entry can be evaluated for a scalar, a
// diagonal or a dense matrix linear part from the same data.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <boost/rational.hpp>

#include "schurerk/matlib.hpp"
#include "schurerk/phi.hpp"

namespace schurerk {

using Rational = boost::rational<std::int64_t>;

inline double to_double(const Rational& r) {
  return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

class PhiExpr {
 public:
  struct Constant {
    Rational value;
  };
  struct Phi {
    int k;
    Rational scale;
  };
  struct Sum {
    std::vector<PhiExpr> terms;
  };
  struct Scale {
    Rational factor;
    std::shared_ptr<const PhiExpr> expr;
  };
  struct Product {
    std::shared_ptr<const PhiExpr> lhs;
    std::shared_ptr<const PhiExpr> rhs;
  };
  using Node = std::variant<Constant, Phi, Sum, Scale, Product>;

  PhiExpr() : node_(Constant{0}) {}
  explicit PhiExpr(Node node) : node_(std::move(node)) {}

  static PhiExpr constant(Rational value) { return PhiExpr(Constant{value}); }
  static PhiExpr phi(int k, Rational scale = 1) { return PhiExpr(Phi{k, scale}); }
  static PhiExpr product(PhiExpr lhs, PhiExpr rhs);

  const Node& node() const { return node_; }

  /// Structurally the constant zero; such entries are skipped by the steppers.
  bool is_zero() const;

  /// Every Phi(k, s) leaf (k, s) reachable from this node.
  void collect_leaves(std::set<std::pair<int, Rational>>& out) const;

  std::string to_string() const;

 private:
  Node node_;
};

PhiExpr operator+(const PhiExpr& a, const PhiExpr& b);
PhiExpr operator-(const PhiExpr& a, const PhiExpr& b);
PhiExpr operator-(const PhiExpr& a);
PhiExpr operator*(Rational c, const PhiExpr& e);

struct EmbeddedRow {
  std::vector<PhiExpr> weights;
  int order = 0;
};

struct ExponentialTableau {
  std::string name;
  std::vector<Rational> step_fractions;
  /// entries[i] holds the i coefficients of stage i (stage 0 is empty).
  std::vector<std::vector<PhiExpr>> entries;
  /// One weight per stage, plus one more when final_uses_embedded_stage: that
  /// weight multiplies F(t + h, y_embedded).
  std::vector<PhiExpr> final_row;
  std::optional<EmbeddedRow> embedded_row;
  int order = 0;
  /// Constant-coefficient method: the linear term is handled explicitly.
  bool classical = false;
  bool final_uses_embedded_stage = false;
  /// Named sub-expressions used while building the entries, for auditing.
  std::vector<std::pair<std::string, PhiExpr>> definitions;

  int stage_count() const { return static_cast<int>(step_fractions.size()); }

  /// Every argument scale s for which some phi_k(s z) is needed, including
  /// the stage propagators phi_0(c_i z).
  std::set<Rational> scales() const;
};

/// RK4, EXPEULER, ERK4CM, ERK4K, ERK4HO5, ERK43ZB. Throws std::invalid_argument
/// for any other name.
const ExponentialTableau& tableau(std::string_view name);

std::vector<std::string> tableau_names();

// ---------------------------------------------------------------------------
// Evaluation

/// Scalar argument z.
class ScalarPhiAlgebra {
 public:
  using value_type = Complex;
  explicit ScalarPhiAlgebra(Complex z) : z_(z) {}
  Complex leaf(int k, const Rational& scale) const;
  Complex constant(double c) const { return c; }
  Complex product(const Complex& a, const Complex& b) const { return a * b; }

 private:
  Complex z_;
};

/// Diagonal argument diag(z); all operations are entrywise.
class DiagPhiAlgebra {
 public:
  using value_type = Vector;
  explicit DiagPhiAlgebra(Vector z) : z_(std::move(z)) {}
  const Vector& leaf(int k, const Rational& scale) const;
  Vector constant(double c) const { return Vector::Constant(z_.size(), c); }
  Vector product(const Vector& a, const Vector& b) const { return a.cwiseProduct(b); }

 private:
  Vector z_;
  mutable std::map<Rational, std::vector<Vector>> cache_;
};

/// Dense matrix argument z; phi_0..phi_3 of each scaled argument are computed
/// once, on first use.
class MatrixPhiAlgebra {
 public:
  using value_type = Matrix;
  explicit MatrixPhiAlgebra(Matrix z) : z_(std::move(z)) {}
  const Matrix& leaf(int k, const Rational& scale) const;
  Matrix constant(double c) const { return c * Matrix::Identity(z_.rows(), z_.cols()); }
  Matrix product(const Matrix& a, const Matrix& b) const { return a * b; }
  int phi_evaluations() const { return static_cast<int>(cache_.size()); }

 private:
  Matrix z_;
  mutable std::map<Rational, std::vector<Matrix>> cache_;
};

template <class Algebra>
typename Algebra::value_type evaluate(const PhiExpr& e, const Algebra& alg) {
  using T = typename Algebra::value_type;
  return std::visit(
      [&](const auto& n) -> T {
        using N = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<N, PhiExpr::Constant>) {
          return alg.constant(to_double(n.value));
        } else if constexpr (std::is_same_v<N, PhiExpr::Phi>) {
          return alg.leaf(n.k, n.scale);
        } else if constexpr (std::is_same_v<N, PhiExpr::Sum>) {
          T acc = evaluate(n.terms.front(), alg);
          for (std::size_t i = 1; i < n.terms.size(); ++i) acc = acc + evaluate(n.terms[i], alg);
          return acc;
        } else if constexpr (std::is_same_v<N, PhiExpr::Scale>) {
          return to_double(n.factor) * evaluate(*n.expr, alg);
        } else {
          return alg.product(evaluate(*n.lhs, alg), evaluate(*n.rhs, alg));
        }
      },
      e.node());
}

/// e at z (the stored argument convention is z = -hL).
Complex evaluate_scalar(const PhiExpr& e, Complex z);

/// Entrywise evaluation at z_i = -hL_i for a diagonal hL.
Vector evaluate_diag(const PhiExpr& e, const Vector& hl_diag);

/// Evaluation at z = -hL; products become matrix products.
Matrix evaluate_matrix(const PhiExpr& e, const Matrix& hl);

}  // namespace schurerk
