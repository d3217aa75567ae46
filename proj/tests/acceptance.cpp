// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "schurerk/cli/commands.hpp"
#include "schurerk/phi.hpp"
#include "schurerk/problems.hpp"
#include "schurerk/stiffness.hpp"
#include "support.hpp"

using namespace schurerk;
using namespace schurerk::cli;
using schurerk::testing::Gen;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

// Observed orders between consecutive rows of one method whose errors both
// lie in [lo, hi].
std::map<std::string, std::vector<double>> windowed_orders(const std::vector<ConvergeRow>& rows,
                                                           double lo = 1e-10, double hi = 1e-3) {
  std::map<std::string, std::vector<double>> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& a = rows[i - 1];
    const auto& b = rows[i];
    if (a.method != b.method) continue;
    auto inside = [&](double e) { return e >= lo && e <= hi; };
    if (inside(a.err_l2) && inside(b.err_l2)) out[b.method].push_back(std::log2(a.err_l2 / b.err_l2) /
                                                                        std::log2(a.h / b.h));
  }
  return out;
}

double min_of(const std::vector<double>& v) { return *std::min_element(v.begin(), v.end()); }
double max_of(const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); }
double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::vector<double> halvings(int from_exp, int to_exp) {
  std::vector<double> h;
  for (int e = from_exp; e >= to_exp; --e) h.push_back(std::ldexp(1.0, e));
  return h;
}

ConvergeConfig heat_sweep(std::vector<std::string> methods) {
  ConvergeConfig cfg;
  cfg.problem.name = "heat_quartic";
  cfg.problem.params.grid = 49;
  cfg.methods = std::move(methods);
  cfg.steps = halvings(-1, -9);
  return cfg;
}

void criterion1(Verdict& v) {
  const auto orders = windowed_orders(run_converge(heat_sweep({"ERK4HO5V", "ERK4HO5M", "ERK43ZBV", "ERK43ZB3V"})));
  for (const auto& [method, target] :
       std::vector<std::pair<std::string, double>>{{"ERK4HO5V", 4}, {"ERK4HO5M", 4}, {"ERK43ZBV", 4}, {"ERK43ZB3V", 3}}) {
    const auto it = orders.find(method);
    if (it == orders.end() || it->second.size() < 2) {
      v.require(false, method + " has fewer than two pairs in the error window");
      continue;
    }
    v.detail << " " << method << " orders in [" << min_of(it->second) << ", " << max_of(it->second) << "]";
    v.require(min_of(it->second) >= target - 0.4 && max_of(it->second) <= target + 0.4, method);
  }
}

void criterion2(Verdict& v) {
  const auto orders = windowed_orders(run_converge(heat_sweep({"ERK4HO5V", "ERK4KV", "ERK4CMV"})));
  for (const char* m : {"ERK4HO5V", "ERK4KV", "ERK4CMV"}) {
    if (!orders.count(m) || orders.at(m).empty()) {
      v.require(false, std::string(m) + " has no pairs in the error window");
      return;
    }
  }
  const auto& ho5 = orders.at("ERK4HO5V");
  const auto& k = orders.at("ERK4KV");
  const auto& cm = orders.at("ERK4CMV");
  v.detail << " min orders HO5 " << min_of(ho5) << ", K " << min_of(k) << ", CM " << min_of(cm)
           << "; median orders HO5 " << median_of(ho5) << ", K " << median_of(k) << ", CM " << median_of(cm);
  v.require(min_of(ho5) - min_of(cm) >= 0.5, "CM gap");
  v.require(min_of(ho5) - min_of(k) >= 0.5, "K gap");
  v.require(median_of(ho5) >= median_of(k) && median_of(k) >= median_of(cm), "ordering HO5 >= K >= CM");
}

void criterion3(Verdict& v) {
  ConvergeConfig cfg;
  cfg.problem.name = "triangular3";
  cfg.methods = {"ERK4HO5M", "ERK4HO5V", "RK4"};
  cfg.steps = halvings(0, -6);
  const auto rows = run_converge(cfg);
  double worst_m = 0.0, least_rk4 = INFINITY;
  for (const auto& r : rows) {
    if (r.method == "ERK4HO5M") worst_m = std::max(worst_m, r.err_l2);
    if (r.method == "RK4" && r.h >= 0.1) least_rk4 = std::min(least_rk4, r.err_l2);
  }
  v.detail << " max ERK4HO5M err " << worst_m << "; min RK4 err for h >= 0.1 " << least_rk4;
  v.require(worst_m <= 1e-9, "ERK4HO5M exactness");
  v.require(least_rk4 > 1.0, "RK4 instability");

  ConvergeConfig fine = cfg;
  fine.methods = {"RK4"};
  fine.steps = halvings(-12, -13);
  double worst_fine = 0.0;
  for (const auto& r : run_converge(fine)) worst_fine = std::max(worst_fine, r.err_l2);
  v.detail << "; RK4 err for h <= 2^-12 " << worst_fine;
  v.require(worst_fine <= 1e-5, "RK4 small-step accuracy");

  const auto orders = windowed_orders(rows);
  const auto it = orders.find("ERK4HO5V");
  if (it == orders.end() || it->second.empty()) {
    v.require(false, "ERK4HO5V has no pairs in the error window");
    return;
  }
  v.detail << "; ERK4HO5V orders in [" << min_of(it->second) << ", " << max_of(it->second) << "]";
  v.require(min_of(it->second) >= 3.5 && max_of(it->second) <= 4.5, "ERK4HO5V order");
}

void criterion4(Verdict& v) {
  BenchConfig cfg;
  cfg.problem.name = "oscillatory";
  cfg.problem.params.grid = 511;
  cfg.problem.params.t_end = 60.0;
  cfg.method = "ERK43ZB";
  cfg.h = 0.3;
  const auto rows = run_bench(cfg);
  const auto& m = rows[0];
  const auto& vec = rows[1];
  v.detail << " matrix " << m.total_ms << " ms, vector " << vec.total_ms << " ms (schur " << vec.schur_ms
           << " ms), speedup " << vec.speedup_vs_matrix;
  v.require(vec.speedup_vs_matrix >= 10.0, "speedup");
}

void criterion5(Verdict& v) {
  AdaptiveConfig cfg;
  cfg.problem.name = "oscillatory";
  cfg.problem.params.grid = 127;
  cfg.problem.params.t_end = 200.0;
  cfg.method = "ERK43ZB";
  cfg.formulation = Formulation::vector;
  cfg.rtols = {1e-6};
  const auto run = run_adaptive(cfg).front();
  v.detail << " accepted " << run.stats.steps_accepted << ", refreshes " << run.stats.weight_refresh_count
           << ", final error " << run.final_error;
  v.require(2 * run.stats.weight_refresh_count < run.stats.steps_accepted, "refresh count");
  v.require(run.final_error <= 100 * 1e-6, "final error");
}

void criterion6(Verdict& v) {
  Gen gen(606);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const Matrix a = gen.normal_matrix(gen.integer(1, 32));
    const auto f = schur_decompose(a);
    worst = std::max(worst, frobenius(f.s) / (1.0 + frobenius(a)));
  }
  v.detail << " max ||S||_F / (1 + ||A||_F) = " << worst;
  v.require(worst <= 1e-10, "strict upper residual");
}

void criterion7(Verdict& v) {
  Gen gen(707);
  double worst_rec = 0.0;
  for (int trial = 0; trial < 20000; ++trial) {
    const int k = gen.integer(0, 3);
    const Complex z = std::polar(gen.log_uniform(1e-12, 50.0), gen.uniform(-std::numbers::pi, std::numbers::pi));
    const Complex pk = phi_scalar(k, z);
    const double res = std::abs(z * phi_scalar(k + 1, z) + 1.0 / std::tgamma(k + 1.0) - pk) / (1 + std::abs(pk));
    worst_rec = std::max(worst_rec, res);
  }
  double worst_cons = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index n = gen.integer(1, 8);
    Vector d(n);
    for (Eigen::Index i = 0; i < n; ++i) d(i) = Complex(gen.uniform(-50, 5), gen.uniform(-5, 5));
    const auto mats = phi_matrix(3, Matrix(d.asDiagonal()));
    for (int k = 0; k <= 3; ++k) {
      const Vector diag = phi_diag(k, d, 1.0);
      for (Eigen::Index i = 0; i < n; ++i) {
        const Complex s = phi_scalar(k, d(i));
        const double scale = std::max(1.0, std::abs(s));
        worst_cons = std::max({worst_cons, std::abs(mats[k](i, i) - s) / scale, std::abs(diag(i) - s) / scale});
      }
      Matrix off = mats[k];
      off.diagonal().setZero();
      worst_cons = std::max(worst_cons, frobenius(off));
    }
  }
  bool exact_at_zero = true;
  const double inv_fact[] = {1.0, 1.0, 0.5, 1.0 / 6.0};
  for (int k = 0; k <= 3; ++k) exact_at_zero = exact_at_zero && phi_scalar(k, 0.0) == Complex(inv_fact[k]);
  v.detail << " recurrence residual " << worst_rec << ", consistency " << worst_cons
           << ", phi_k(0) exact: " << (exact_at_zero ? "yes" : "no");
  v.require(worst_rec <= 1e-13, "recurrence");
  v.require(worst_cons <= 1e-12, "consistency");
  v.require(exact_at_zero, "phi_k(0) = 1/k!");
}

void criterion8(Verdict& v) {
  Gen gen(808);
  double worst_const = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = gen.integer(1, 8);
    const Matrix u = gen.unitary(n);
    Matrix t = 0.5 * gen.strictly_upper(n);
    for (Eigen::Index i = 0; i < n; ++i) t(i, i) = gen.uniform(0.0, 20.0);
    const double h = gen.uniform(0.01, 10.0);
    IVProblem p = constant_forcing(u * t * u.adjoint(), gen.vector(n), gen.vector(n), 3.0 * h);
    p.real_valued = false;
    const Vector exact = p.exact(p.t_end);
    for (const char* name : {"EXPEULER", "ERK4CM", "ERK4K", "ERK4HO5", "ERK43ZB"}) {
      const auto r = integrate_fixed(p, tableau(name), h, Formulation::matrix);
      worst_const = std::max(worst_const, (r.final_sample().y - exact).cwiseAbs().maxCoeff() / (1 + exact.norm()));
    }
  }
  double worst_nil = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index m = gen.integer(1, 5);
    const Matrix s = gen.strictly_upper(m);
    const double h = gen.uniform(0.01, 10.0);
    IVProblem p;
    p.name = "nilpotent";
    p.linear = s;
    p.y0 = gen.vector(m);
    p.t_end = 2.0 * h;
    p.real_valued = false;
    p.nonlinearity = [m](double, const Vector&) { return Vector::Zero(m); };
    Vector term = p.y0, exact = p.y0;
    for (int k = 1; k < m; ++k) {
      term = (-p.t_end / k) * (s * term);
      exact += term;
    }
    const auto r = integrate_fixed(p, tableau("RK4"), h, Formulation::vector);
    worst_nil = std::max(worst_nil, (r.final_sample().y - exact).cwiseAbs().maxCoeff() / (1 + exact.norm()));
  }
  v.detail << " constant-F worst " << worst_const << ", nilpotent RK4 worst " << worst_nil;
  v.require(worst_const <= 1e-12, "constant-F exactness");
  v.require(worst_nil <= 1e-12, "nilpotent exactness");
}

void criterion9(Verdict& v) {
  AdaptiveConfig cfg;
  cfg.problem.name = "system2";
  cfg.problem.params.t_end = 10.0;
  cfg.rtols = {1e-8};
  cfg.atol = 1e-8;
  const auto run = run_adaptive(cfg).front();
  v.detail << " error at t=10: " << run.final_error;
  v.require(run.final_error <= 1e-5, "closed-form error");
}

void criterion10(Verdict& v) {
  const double r1 = stiffness_ratio(system1().linear);
  const double r2 = stiffness_ratio(system2().linear);
  v.detail << " ratios " << r1 << ", " << r2;
  v.require(std::abs(r1 - 3.0) <= 3e-9 && std::abs(r2 - 1000.0) <= 1e-6, "stiffness ratios");

  const auto a = stiffness_report(system1());
  const auto b = stiffness_report(system2());
  double worst_gamma = 0.0, least_ratio = INFINITY;
  for (std::size_t i = 0; i < b.windows.size(); ++i) {
    const auto& g = b.windows[i].lyapunov.gamma;
    worst_gamma = std::max({worst_gamma, std::abs(g(0) + 1.0), std::abs(g(1) + 1000.0) / 1000.0});
    least_ratio = std::min(least_ratio, b.windows[i].r_nl / a.windows[i].r_nl);
  }
  v.detail << "; worst relative exponent error " << worst_gamma << "; min R_nl ratio " << least_ratio;
  v.require(worst_gamma <= 0.01, "Lyapunov exponents");
  v.require(least_ratio >= 100.0, "R_nl ratio");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Verdict&)>>> criteria = {
      {"convergence order on heat_quartic N=49", criterion1},
      {"order reduction of ERK4CM and ERK4K", criterion2},
      {"triangular 3x3 system", criterion3},
      {"vector vs matrix speedup, oscillatory N=511", criterion4},
      {"adaptive run on oscillatory N=127", criterion5},
      {"normal matrices have diagonal Schur factor", criterion6},
      {"phi-function suite", criterion7},
      {"exactness properties", criterion8},
      {"adaptive stiff system vs closed form", criterion9},
      {"stiffness diagnostics", criterion10},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    v.detail.precision(4);
    try {
      criteria[i].second(v);
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << " [exception: " << e.what() << "]";
    }
    if (!v.pass) ++failures;
    std::printf("%s criterion %zu: %s:%s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                v.detail.str().c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
