#pragma once

#include <string>
#include <vector>

#include "carnot/group.hpp"
#include "carnot/polynomial.hpp"

namespace carnot {

// First-order operator sum_m b_m(x) d/dx_m with exact polynomial
// coefficients in exponential coordinates.
struct PolyVectorField {
  std::vector<RatPoly> coeffs;  // size N, polynomials in N spatial vars
  int layer = 1;                // lowers homogeneous degree by this amount

  int dim() const { return static_cast<int>(coeffs.size()); }

  bool operator==(const PolyVectorField& o) const { return coeffs == o.coeffs; }

  template <class C>
  Polynomial<C> apply(const Polynomial<C>& p) const;

  // Value of the coefficient vector at a point.
  std::vector<double> eval(std::span<const double> x) const {
    std::vector<double> b(coeffs.size());
    for (std::size_t m = 0; m < coeffs.size(); ++m) b[m] = coeffs[m].eval(x);
    return b;
  }
};

template <>
inline Polynomial<Rational> PolyVectorField::apply(const Polynomial<Rational>& p) const {
  Polynomial<Rational> out(p.nvars());
  for (int m = 0; m < dim(); ++m) {
    if (coeffs[m].empty()) continue;
    Polynomial<Rational> dp = p.derivative(m);
    if (!dp.empty()) out += coeffs[m] * dp;
  }
  return out;
}

template <>
inline Polynomial<double> PolyVectorField::apply(const Polynomial<double>& p) const {
  Polynomial<double> out(p.nvars());
  for (int m = 0; m < dim(); ++m) {
    if (coeffs[m].empty()) continue;
    Polynomial<double> dp = p.derivative(m);
    if (!dp.empty()) out += to_double_poly(coeffs[m]) * dp;
  }
  return out;
}

// Ordered word of horizontal field indices (0-based) plus a time-derivative
// order; homogeneous order |I| + 2l.
struct DerivativeMultiIndex {
  std::vector<int> word;
  int time_order = 0;

  int homogeneous_order() const { return static_cast<int>(word.size()) + 2 * time_order; }
  std::string str() const;
};

// Left-invariant basis fields obtained from the differential of left
// translation at the identity (columns of d/dq (p*q) at q = 0).
std::vector<PolyVectorField> left_invariant_basis(const CarnotGroup& g);
std::vector<PolyVectorField> horizontal_fields(const CarnotGroup& g);

PolyVectorField commutator(const PolyVectorField& v, const PolyVectorField& w);

struct HormanderReport {
  std::vector<int> span_dim_by_depth;  // span at the origin after each bracket depth
  int spanning_depth = -1;
  bool spans = false;
  std::vector<std::string> missing_directions;
};

HormanderReport check_hormander(const CarnotGroup& g);

// X^I D_t^l applied to a polynomial, composed innermost-first.
template <class C>
Polynomial<C> apply_derivative(const Polynomial<C>& f, const DerivativeMultiIndex& d,
                               const std::vector<PolyVectorField>& horizontal) {
  Polynomial<C> out = f;
  for (int l = 0; l < d.time_order; ++l) out = out.dt();
  for (auto it = d.word.rbegin(); it != d.word.rend(); ++it) out = horizontal.at(*it).apply(out);
  return out;
}

// All derivative words with |I| + 2l equal to (or up to) a given
// homogeneous order.
std::vector<DerivativeMultiIndex> derivative_words_of_order(int m1, int order);
std::vector<DerivativeMultiIndex> derivative_words_up_to(int m1, int order);

}  // namespace carnot
