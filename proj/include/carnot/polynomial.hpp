#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "carnot/rational.hpp"

namespace carnot {

// Monomial x^sx * t^st over a fixed number of spatial variables.
struct Monomial {
  std::vector<int> sx;
  int st = 0;

  Monomial() = default;
  explicit Monomial(int nvars, int time_exp = 0) : sx(nvars, 0), st(time_exp) {}

  bool operator==(const Monomial& o) const { return st == o.st && sx == o.sx; }
  bool operator<(const Monomial& o) const {
    if (sx != o.sx) return sx < o.sx;
    return st < o.st;
  }

  int total_degree() const {
    int d = 2 * st;
    for (int e : sx) d += e;
    return d;
  }

  // Homogeneous degree with per-coordinate weights; time always weighs 2.
  int weighted_degree(std::span<const int> weights) const {
    assert(weights.size() == sx.size());
    int d = 2 * st;
    for (std::size_t i = 0; i < sx.size(); ++i) d += weights[i] * sx[i];
    return d;
  }
};

namespace detail {
template <class C>
bool is_zero_coeff(const C& c) {
  if constexpr (std::is_floating_point_v<C>)
    return c == C(0);
  else
    return c.is_zero();
}
}  // namespace detail

// Sparse polynomial with coefficients in C (Rational for exact paths, double
// for sampled data). Spatial variables are indexed 0..nvars-1; one extra
// time variable is tracked through the monomial's time exponent.
template <class C>
class Polynomial {
 public:
  Polynomial() : nvars_(0) {}
  explicit Polynomial(int nvars) : nvars_(nvars) {}

  static Polynomial constant(int nvars, C value) {
    Polynomial p(nvars);
    p.add_term(Monomial(nvars), value);
    return p;
  }
  static Polynomial variable(int nvars, int var, C scale = C(1)) {
    Polynomial p(nvars);
    Monomial m(nvars);
    m.sx.at(var) = 1;
    p.add_term(m, scale);
    return p;
  }
  static Polynomial time_variable(int nvars, C scale = C(1)) {
    Polynomial p(nvars);
    p.add_term(Monomial(nvars, 1), scale);
    return p;
  }

  int nvars() const { return nvars_; }
  bool empty() const { return terms_.empty(); }
  std::size_t term_count() const { return terms_.size(); }
  const std::map<Monomial, C>& terms() const { return terms_; }

  void add_term(const Monomial& m, const C& c) {
    assert(static_cast<int>(m.sx.size()) == nvars_);
    if (detail::is_zero_coeff(c)) return;
    auto [it, inserted] = terms_.emplace(m, c);
    if (!inserted) {
      it->second += c;
      if (detail::is_zero_coeff(it->second)) terms_.erase(it);
    }
  }

  C coeff(const Monomial& m) const {
    auto it = terms_.find(m);
    return it == terms_.end() ? C(0) : it->second;
  }

  Polynomial& operator+=(const Polynomial& o) {
    check_same(o);
    for (const auto& [m, c] : o.terms_) add_term(m, c);
    return *this;
  }
  Polynomial& operator-=(const Polynomial& o) {
    check_same(o);
    for (const auto& [m, c] : o.terms_) add_term(m, C(-1) * c);
    return *this;
  }
  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }

  Polynomial operator-() const { return *this * C(-1); }

  Polynomial operator*(const C& s) const {
    Polynomial r(nvars_);
    if (detail::is_zero_coeff(s)) return r;
    for (const auto& [m, c] : terms_) r.terms_.emplace(m, c * s);
    return r;
  }
  Polynomial& operator*=(const C& s) { return *this = *this * s; }

  Polynomial operator*(const Polynomial& o) const {
    check_same(o);
    Polynomial r(nvars_);
    for (const auto& [ma, ca] : terms_) {
      for (const auto& [mb, cb] : o.terms_) {
        Monomial m(nvars_);
        for (int i = 0; i < nvars_; ++i) m.sx[i] = ma.sx[i] + mb.sx[i];
        m.st = ma.st + mb.st;
        r.add_term(m, ca * cb);
      }
    }
    return r;
  }

  bool operator==(const Polynomial& o) const { return nvars_ == o.nvars_ && terms_ == o.terms_; }

  // d/dx_var
  Polynomial derivative(int var) const {
    Polynomial r(nvars_);
    for (const auto& [m, c] : terms_) {
      if (m.sx[var] == 0) continue;
      Monomial d = m;
      d.sx[var] -= 1;
      r.add_term(d, c * C(m.sx[var]));
    }
    return r;
  }

  // d/dt
  Polynomial dt() const {
    Polynomial r(nvars_);
    for (const auto& [m, c] : terms_) {
      if (m.st == 0) continue;
      Monomial d = m;
      d.st -= 1;
      r.add_term(d, c * C(m.st));
    }
    return r;
  }

  double eval(std::span<const double> x, double t = 0.0) const {
    assert(static_cast<int>(x.size()) == nvars_);
    double sum = 0.0;
    for (const auto& [m, c] : terms_) {
      double term = coeff_to_double(c);
      for (int i = 0; i < nvars_; ++i)
        for (int e = 0; e < m.sx[i]; ++e) term *= x[i];
      for (int e = 0; e < m.st; ++e) term *= t;
      sum += term;
    }
    return sum;
  }

  C eval_exact(std::span<const C> x, const C& t = C(0)) const {
    assert(static_cast<int>(x.size()) == nvars_);
    C sum(0);
    for (const auto& [m, c] : terms_) {
      C term = c;
      for (int i = 0; i < nvars_; ++i)
        for (int e = 0; e < m.sx[i]; ++e) term *= x[i];
      for (int e = 0; e < m.st; ++e) term *= t;
      sum += term;
    }
    return sum;
  }

  // Substitutes each spatial variable by subs[i]; the time variable passes
  // through unchanged. All subs must share a common variable count.
  Polynomial compose_spatial(const std::vector<Polynomial>& subs) const {
    assert(static_cast<int>(subs.size()) == nvars_);
    int out_vars = subs.empty() ? 0 : subs.front().nvars();
    Polynomial r(out_vars);
    for (const auto& [m, c] : terms_) {
      Polynomial term = Polynomial::constant(out_vars, c);
      for (int i = 0; i < nvars_; ++i)
        for (int e = 0; e < m.sx[i]; ++e) term = term * subs[i];
      Polynomial shifted(out_vars);
      for (const auto& [tm, tc] : term.terms()) {
        Monomial mm = tm;
        mm.st += m.st;
        shifted.add_term(mm, tc);
      }
      r += shifted;
    }
    return r;
  }

  int max_weighted_degree(std::span<const int> weights) const {
    int d = -1;
    for (const auto& [m, c] : terms_) d = std::max(d, m.weighted_degree(weights));
    return d;
  }

  Polynomial homogeneous_part(std::span<const int> weights, int degree) const {
    Polynomial r(nvars_);
    for (const auto& [m, c] : terms_)
      if (m.weighted_degree(weights) == degree) r.terms_.emplace(m, c);
    return r;
  }

  Polynomial truncate_weighted(std::span<const int> weights, int max_degree) const {
    Polynomial r(nvars_);
    for (const auto& [m, c] : terms_)
      if (m.weighted_degree(weights) <= max_degree) r.terms_.emplace(m, c);
    return r;
  }

  bool is_weighted_homogeneous(std::span<const int> weights, int degree) const {
    for (const auto& [m, c] : terms_)
      if (m.weighted_degree(weights) != degree) return false;
    return true;
  }

  static double coeff_to_double(const C& c) {
    if constexpr (std::is_floating_point_v<C>)
      return c;
    else
      return to_double(c);
  }

 private:
  void check_same(const Polynomial& o) const {
    if (nvars_ != o.nvars_) throw std::invalid_argument("polynomial variable count mismatch");
  }

  int nvars_;
  std::map<Monomial, C> terms_;
};

using RatPoly = Polynomial<Rational>;

inline Polynomial<double> to_double_poly(const RatPoly& p) {
  Polynomial<double> r(p.nvars());
  for (const auto& [m, c] : p.terms()) r.add_term(m, to_double(c));
  return r;
}

}  // namespace carnot
