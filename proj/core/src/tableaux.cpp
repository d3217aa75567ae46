#include "schurerk/tableaux.hpp"

#include <sstream>
#include <stdexcept>

namespace schurerk {

PhiExpr PhiExpr::product(PhiExpr lhs, PhiExpr rhs) {
  return PhiExpr(Product{std::make_shared<const PhiExpr>(std::move(lhs)),
                         std::make_shared<const PhiExpr>(std::move(rhs))});
}

bool PhiExpr::is_zero() const {
  const auto* c = std::get_if<Constant>(&node_);
  return c != nullptr && c->value == Rational(0);
}

void PhiExpr::collect_leaves(std::set<std::pair<int, Rational>>& out) const {
  std::visit(
      [&](const auto& n) {
        using N = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<N, Phi>) {
          out.emplace(n.k, n.scale);
        } else if constexpr (std::is_same_v<N, Sum>) {
          for (const auto& t : n.terms) t.collect_leaves(out);
        } else if constexpr (std::is_same_v<N, Scale>) {
          n.expr->collect_leaves(out);
        } else if constexpr (std::is_same_v<N, Product>) {
          n.lhs->collect_leaves(out);
          n.rhs->collect_leaves(out);
        }
      },
      node_);
}

std::string PhiExpr::to_string() const {
  std::ostringstream os;
  std::visit(
      [&](const auto& n) {
        using N = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<N, Constant>) {
          os << n.value;
        } else if constexpr (std::is_same_v<N, Phi>) {
          os << "phi" << n.k;
          if (n.scale != Rational(1)) os << "(" << n.scale << "z)";
        } else if constexpr (std::is_same_v<N, Sum>) {
          os << "(";
          for (std::size_t i = 0; i < n.terms.size(); ++i) {
            if (i) os << " + ";
            os << n.terms[i].to_string();
          }
          os << ")";
        } else if constexpr (std::is_same_v<N, Scale>) {
          os << n.factor << "*" << n.expr->to_string();
        } else {
          os << n.lhs->to_string() << "*" << n.rhs->to_string();
        }
      },
      node_);
  return os.str();
}

PhiExpr operator+(const PhiExpr& a, const PhiExpr& b) {
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  std::vector<PhiExpr> terms;
  for (const PhiExpr* e : {&a, &b}) {
    if (const auto* s = std::get_if<PhiExpr::Sum>(&e->node())) {
      terms.insert(terms.end(), s->terms.begin(), s->terms.end());
    } else {
      terms.push_back(*e);
    }
  }
  return PhiExpr(PhiExpr::Sum{std::move(terms)});
}

PhiExpr operator*(Rational c, const PhiExpr& e) {
  if (c == Rational(0) || e.is_zero()) return PhiExpr::constant(0);
  if (c == Rational(1)) return e;
  if (const auto* k = std::get_if<PhiExpr::Constant>(&e.node())) return PhiExpr::constant(c * k->value);
  if (const auto* s = std::get_if<PhiExpr::Scale>(&e.node())) return (c * s->factor) * *s->expr;
  return PhiExpr(PhiExpr::Scale{c, std::make_shared<const PhiExpr>(e)});
}

PhiExpr operator-(const PhiExpr& a) { return Rational(-1) * a; }

PhiExpr operator-(const PhiExpr& a, const PhiExpr& b) { return a + (-b); }

std::set<Rational> ExponentialTableau::scales() const {
  std::set<std::pair<int, Rational>> leaves;
  for (const auto& row : entries) {
    for (const auto& e : row) e.collect_leaves(leaves);
  }
  for (const auto& e : final_row) e.collect_leaves(leaves);
  if (embedded_row) {
    for (const auto& e : embedded_row->weights) e.collect_leaves(leaves);
  }
  std::set<Rational> out;
  for (const auto& [k, s] : leaves) out.insert(s);
  for (const auto& c : step_fractions) {
    if (c != Rational(0)) out.insert(c);
  }
  out.insert(Rational(1));
  return out;
}

namespace {

using R = Rational;

PhiExpr c(R v) { return PhiExpr::constant(v); }
// phi_k(z), phi_k(z/2), phi_k(z/6)
PhiExpr p(int k) { return PhiExpr::phi(k, 1); }
PhiExpr ph(int k) { return PhiExpr::phi(k, R(1, 2)); }
PhiExpr ps(int k) { return PhiExpr::phi(k, R(1, 6)); }

const PhiExpr kZero = c(0);

ExponentialTableau make_rk4() {
  ExponentialTableau t;
  t.name = "RK4";
  t.step_fractions = {0, R(1, 2), R(1, 2), 1};
  t.entries = {{}, {c(R(1, 2))}, {kZero, c(R(1, 2))}, {kZero, kZero, c(1)}};
  t.final_row = {c(R(1, 6)), c(R(1, 3)), c(R(1, 3)), c(R(1, 6))};
  t.order = 4;
  t.classical = true;
  return t;
}

ExponentialTableau make_exp_euler() {
  ExponentialTableau t;
  t.name = "EXPEULER";
  t.step_fractions = {0};
  t.entries = {{}};
  t.final_row = {p(1)};
  t.order = 1;
  return t;
}

// Shared fourth-order final row of ERK4CM and ERK4K.
std::vector<PhiExpr> cox_matthews_weights() {
  return {p(1) - R(3) * p(2) + R(4) * p(3), R(2) * p(2) - R(4) * p(3),
          R(2) * p(2) - R(4) * p(3), R(4) * p(3) - p(2)};
}

ExponentialTableau make_erk4cm() {
  ExponentialTableau t;
  t.name = "ERK4CM";
  t.step_fractions = {0, R(1, 2), R(1, 2), 1};
  t.entries = {{},
               {R(1, 2) * ph(1)},
               {kZero, R(1, 2) * ph(1)},
               {PhiExpr::product(R(1, 2) * ph(1), ph(0) - c(1)), kZero, ph(1)}};
  t.final_row = cox_matthews_weights();
  t.order = 4;
  return t;
}

ExponentialTableau make_erk4k() {
  ExponentialTableau t;
  t.name = "ERK4K";
  t.step_fractions = {0, R(1, 2), R(1, 2), 1};
  t.entries = {{},
               {R(1, 2) * ph(1)},
               {R(1, 2) * ph(1) - ph(2), ph(2)},
               {p(1) - R(2) * p(2), kZero, R(2) * p(2)}};
  t.final_row = cox_matthews_weights();
  t.order = 4;
  return t;
}

ExponentialTableau make_erk4ho5() {
  ExponentialTableau t;
  t.name = "ERK4HO5";
  t.step_fractions = {0, R(1, 2), R(1, 2), 1, R(1, 2)};
  const PhiExpr a31 = R(1, 2) * ph(2) - p(3) + R(1, 4) * p(2) - R(1, 2) * ph(3);
  const PhiExpr a43 = R(1, 4) * ph(2) - a31;
  t.definitions = {{"a31", a31}, {"a43", a43}};
  t.entries = {{},
               {R(1, 2) * ph(1)},
               {R(1, 2) * ph(1) - ph(2), ph(2)},
               {p(1) - R(2) * p(2), p(2), p(2)},
               {R(1, 2) * ph(1) - R(2) * a31 - a43, a31, a31, a43}};
  t.final_row = {p(1) - R(3) * p(2) + R(4) * p(3), kZero, kZero, -p(2) + R(4) * p(3),
                 R(4) * p(2) - R(8) * p(3)};
  t.order = 4;
  return t;
}

ExponentialTableau make_erk43zb() {
  ExponentialTableau t;
  t.name = "ERK43ZB";
  t.step_fractions = {0, R(1, 6), R(1, 2), R(1, 2)};
  const PhiExpr a11 = R(3, 2) * ph(2) + R(1, 2) * ps(2);
  const PhiExpr a21 = R(19, 60) * p(1) + R(1, 2) * ph(1) + R(1, 2) * ps(1) + R(2) * ph(2) +
                      R(13, 6) * ps(2) + R(3, 5) * ph(3);
  const PhiExpr a22 = R(-19, 180) * p(1) - R(1, 6) * ph(1) - R(1, 6) * ps(1) -
                      R(1, 6) * ph(2) + R(1, 9) * ps(2) - R(1, 5) * ph(3);
  const PhiExpr a33 = p(2) + ph(2) - R(6) * p(3) - R(3) * ph(3);
  const PhiExpr a31 = R(3) * p(2) - R(9, 2) * ph(2) - R(5, 2) * ps(2) + R(6) * a33 + a21;
  const PhiExpr a32 = R(6) * p(3) + R(3) * ph(3) - R(2) * a33 + a22;
  const PhiExpr a43 = R(7, 9) * p(2) - R(10, 3) * p(3);
  const PhiExpr a44 = R(4, 3) * p(3) - R(1, 9) * p(2);
  t.definitions = {{"a11", a11}, {"a21", a21}, {"a22", a22}, {"a33", a33},
                   {"a31", a31}, {"a32", a32}, {"a43", a43}, {"a44", a44}};
  t.entries = {{},
               {R(1, 6) * ps(1)},
               {R(1, 2) * ph(1) - a11, a11},
               {R(1, 2) * ph(1) - a21 - a22, a21, a22}};
  t.embedded_row = EmbeddedRow{{p(1) - a31 - a32 - a33, a31, a32, a33}, 3};
  t.final_row = {p(1) - R(67, 9) * p(2) + R(52, 3) * p(3), R(8) * p(2) - R(24) * p(3),
                 R(26, 3) * p(3) - R(11, 9) * p(2), a43, a44};
  t.final_uses_embedded_stage = true;
  t.order = 4;
  return t;
}

const std::map<std::string, ExponentialTableau, std::less<>>& registry() {
  static const std::map<std::string, ExponentialTableau, std::less<>> tables = [] {
    std::map<std::string, ExponentialTableau, std::less<>> m;
    for (auto t : {make_rk4(), make_exp_euler(), make_erk4cm(), make_erk4k(), make_erk4ho5(),
                   make_erk43zb()}) {
      m.emplace(t.name, std::move(t));
    }
    return m;
  }();
  return tables;
}

}  // namespace

const ExponentialTableau& tableau(std::string_view name) {
  const auto& reg = registry();
  const auto it = reg.find(name);
  if (it == reg.end()) throw std::invalid_argument("unknown method '" + std::string(name) + "'");
  return it->second;
}

std::vector<std::string> tableau_names() {
  std::vector<std::string> out;
  for (const auto& [name, t] : registry()) out.push_back(name);
  return out;
}

Complex ScalarPhiAlgebra::leaf(int k, const Rational& scale) const {
  return phi_scalar(k, to_double(scale) * z_);
}

const Vector& DiagPhiAlgebra::leaf(int k, const Rational& scale) const {
  auto it = cache_.find(scale);
  if (it == cache_.end()) {
    std::vector<Vector> phis(kMaxMatrixPhiOrder + 1, Vector(z_.size()));
    const double s = to_double(scale);
    for (Eigen::Index i = 0; i < z_.size(); ++i) {
      const auto values = phi_scalars(s * z_(i));
      for (int j = 0; j <= kMaxMatrixPhiOrder; ++j) phis[j](i) = values[j];
    }
    it = cache_.emplace(scale, std::move(phis)).first;
  }
  return it->second.at(k);
}

const Matrix& MatrixPhiAlgebra::leaf(int k, const Rational& scale) const {
  auto it = cache_.find(scale);
  if (it == cache_.end()) {
    it = cache_.emplace(scale, phi_matrix(kMaxMatrixPhiOrder, to_double(scale) * z_)).first;
  }
  return it->second.at(k);
}

Complex evaluate_scalar(const PhiExpr& e, Complex z) { return evaluate(e, ScalarPhiAlgebra(z)); }

Vector evaluate_diag(const PhiExpr& e, const Vector& hl_diag) {
  return evaluate(e, DiagPhiAlgebra(-hl_diag));
}

Matrix evaluate_matrix(const PhiExpr& e, const Matrix& hl) {
  return evaluate(e, MatrixPhiAlgebra(-hl));
}

}  // namespace schurerk
