#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <span>
#include <string>
#include <vector>

#include "magwell/errors.hpp"
#include "magwell/expr.hpp"
#include "magwell/vec3.hpp"

namespace magwell {

// Shared index tables for dense truncated polynomials in n <= 3 variables of
// total degree <= D; built once per (n, D) and cached.
struct JetTables {
  int nvars = 0;
  int degree = 0;
  std::vector<std::array<int, 3>> exps;  // rank -> exponents (unused slots 0)
  std::vector<int> rank_lut;             // packed exponents -> rank, -1 if absent
  struct ProdEntry {
    int ia, ib, ir;
  };
  std::vector<ProdEntry> prod;  // all coefficient pairs with degree sum <= D

  static const JetTables& get(int nvars, int degree);

  int rank(int e0, int e1, int e2) const {
    int d1 = degree + 1;
    return rank_lut[(e0 * d1 + e1) * d1 + e2];
  }
  int total_degree(int r) const { return exps[r][0] + exps[r][1] + exps[r][2]; }
};

// Truncated multivariate Taylor polynomial at a base point (the base point is
// carried by the caller; coefficients are in local displacement coordinates).
// Ring operations are exact modulo total degree > D.
template <class T>
class Jet {
 public:
  Jet() = default;
  Jet(int nvars, int degree)
      : tab_(&JetTables::get(nvars, degree)), c_(tab_->exps.size(), T{}) {}

  static Jet constant(int nvars, int degree, T v) {
    Jet j(nvars, degree);
    j.c_[0] = v;
    return j;
  }
  static Jet variable(int nvars, int degree, int var, T scale = T{1}) {
    Jet j(nvars, degree);
    int e[3] = {0, 0, 0};
    e[var] = 1;
    j.c_[j.tab_->rank(e[0], e[1], e[2])] = scale;
    return j;
  }

  int nvars() const { return tab_->nvars; }
  int degree() const { return tab_->degree; }
  bool empty() const { return tab_ == nullptr; }
  const JetTables& tables() const { return *tab_; }

  T value() const { return c_[0]; }
  T coeff(int e0, int e1 = 0, int e2 = 0) const {
    int r = tab_->rank(e0, e1, e2);
    return r < 0 ? T{} : c_[r];
  }
  void set_coeff(int e0, int e1, int e2, T v) { c_[tab_->rank(e0, e1, e2)] = v; }
  T& raw(int rank) { return c_[rank]; }
  const T& raw(int rank) const { return c_[rank]; }
  std::size_t size() const { return c_.size(); }

  Jet operator+(const Jet& o) const {
    Jet r = *this;
    for (std::size_t i = 0; i < c_.size(); ++i) r.c_[i] += o.c_[i];
    return r;
  }
  Jet operator-(const Jet& o) const {
    Jet r = *this;
    for (std::size_t i = 0; i < c_.size(); ++i) r.c_[i] -= o.c_[i];
    return r;
  }
  Jet operator-() const {
    Jet r = *this;
    for (auto& v : r.c_) v = -v;
    return r;
  }
  Jet& operator+=(const Jet& o) {
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
    return *this;
  }
  Jet operator*(T s) const {
    Jet r = *this;
    for (auto& v : r.c_) v *= s;
    return r;
  }

  Jet operator*(const Jet& o) const {
    Jet r(nvars(), degree());
    for (const auto& p : tab_->prod) {
      if (c_[p.ia] != T{} && o.c_[p.ib] != T{}) r.c_[p.ir] += c_[p.ia] * o.c_[p.ib];
    }
    return r;
  }

  // d/dx_v; degree cap unchanged (top coefficients of the result are zero).
  Jet partial(int v) const {
    Jet r(nvars(), degree());
    for (std::size_t i = 0; i < c_.size(); ++i) {
      if (c_[i] == T{}) continue;
      auto e = tab_->exps[i];
      if (e[v] == 0) continue;
      T f = static_cast<double>(e[v]) * c_[i];
      e[v] -= 1;
      r.c_[tab_->rank(e[0], e[1], e[2])] = f;
    }
    return r;
  }

  // Integral from 0 in x_v; coefficients that would exceed the cap are dropped.
  Jet antiderivative(int v) const {
    Jet r(nvars(), degree());
    for (std::size_t i = 0; i < c_.size(); ++i) {
      if (c_[i] == T{}) continue;
      auto e = tab_->exps[i];
      if (e[0] + e[1] + e[2] + 1 > degree()) continue;
      e[v] += 1;
      r.c_[tab_->rank(e[0], e[1], e[2])] = c_[i] / static_cast<double>(e[v]);
    }
    return r;
  }

  // Substitution of inner jets (one per outer variable); inner jets must have
  // zero constant term so the truncation remains exact.
  Jet compose(std::span<const Jet> inner) const {
    if (static_cast<int>(inner.size()) != nvars())
      throw NumericalError("jet compose: wrong number of inner jets");
    for (const Jet& g : inner)
      if (std::abs(g.value()) != 0.0)
        throw NumericalError("jet compose: inner jet has nonzero constant term");
    const int d = degree();
    const int n = nvars();
    const int in_n = inner[0].nvars();
    // Powers of each inner jet up to the outer degree.
    std::vector<std::vector<Jet>> pw(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v) {
      pw[v].reserve(d + 1);
      pw[v].push_back(Jet::constant(in_n, d, T{1}));
      for (int k = 1; k <= d; ++k) pw[v].push_back(pw[v][k - 1] * inner[v]);
    }
    Jet r(in_n, d);
    for (std::size_t i = 0; i < c_.size(); ++i) {
      if (c_[i] == T{}) continue;
      auto e = tab_->exps[i];
      Jet term = pw[0][e[0]];
      if (n > 1 && e[1] > 0) term = term * pw[1][e[1]];
      if (n > 2 && e[2] > 0) term = term * pw[2][e[2]];
      r += term * c_[i];
    }
    return r;
  }

  // Multiplicative inverse; requires a nonzero constant term.
  Jet reciprocal() const {
    if (std::abs(value()) == 0.0)
      throw NumericalError("jet reciprocal: zero constant term");
    Jet y = Jet::constant(nvars(), degree(), T{1} / value());
    Jet two = Jet::constant(nvars(), degree(), T{2});
    int steps = 1;
    while ((1 << steps) < degree() + 1) ++steps;
    for (int i = 0; i <= steps; ++i) y = y * (two - *this * y);
    return y;
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& v : c_) m = std::max(m, std::abs(v));
    return m;
  }

  T eval(const Vec3& x) const {
    T s{};
    for (std::size_t i = 0; i < c_.size(); ++i) {
      if (c_[i] == T{}) continue;
      auto e = tab_->exps[i];
      s += c_[i] * (powi(x.x, e[0]) * powi(x.y, e[1]) * powi(x.z, e[2]));
    }
    return s;
  }

 private:
  const JetTables* tab_ = nullptr;
  std::vector<T> c_;
};

// Square root with positive (double) / nonzero (complex) constant term.
template <class T>
Jet<T> sqrt(const Jet<T>& a) {
  if constexpr (std::is_same_v<T, double>) {
    if (!(a.value() > 0.0)) throw NumericalError("jet sqrt: constant term not positive");
  } else {
    if (std::abs(a.value()) == 0.0) throw NumericalError("jet sqrt: zero constant term");
  }
  using std::sqrt;
  Jet<T> y = Jet<T>::constant(a.nvars(), a.degree(), sqrt(a.value()));
  int steps = 1;
  while ((1 << steps) < a.degree() + 1) ++steps;
  for (int i = 0; i <= steps; ++i) y = (y + a * y.reciprocal()) * T{0.5};
  return y;
}

using JetD = Jet<double>;
using JetC = Jet<std::complex<double>>;

JetC to_complex(const JetD& j);
JetD real_part(const JetC& j);
double max_imag(const JetC& j);

// Taylor jet of a symbolic expression at `center`: coefficients are exact
// partial derivatives (via repeated Expr::diff) divided by factorials.
JetD jet_from_expr(const Expr& e, const Vec3& center, int degree);

// One "multi-index coefficient" line per nonzero entry, for golden files.
std::string jet_table_string(const JetD& j);

}  // namespace magwell
