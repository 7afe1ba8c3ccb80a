#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "carnot/group.hpp"
#include "carnot/polynomial.hpp"

namespace carnot {

// Ordered monomial basis of the graded polynomial space P_d (all monomials
// of homogeneous degree <= d) or of its homogeneous slice H_d. Ordering is
// graded lexicographic: (homogeneous degree, spatial exponents in layer
// order, time exponent).
class PolySpaceBasis {
 public:
  static PolySpaceBasis up_to_degree(const CarnotGroup& g, int d);
  static PolySpaceBasis homogeneous(const CarnotGroup& g, int d);

  int dim() const { return static_cast<int>(monomials_.size()); }
  const std::vector<Monomial>& monomials() const { return monomials_; }
  const Monomial& monomial(int i) const { return monomials_[i]; }
  int degree_cap() const { return degree_cap_; }

  // -1 when the monomial is not in the basis.
  int index_of(const Monomial& m) const {
    auto it = index_.find(m);
    return it == index_.end() ? -1 : it->second;
  }

  std::vector<Rational> coefficients_of(const RatPoly& p) const;
  RatPoly to_polynomial(const std::vector<Rational>& coeffs, int nvars) const;

 private:
  std::vector<Monomial> monomials_;
  std::map<Monomial, int> index_;
  int degree_cap_ = 0;
};

// Number of monomials of homogeneous degree exactly d / at most d, by an
// independent generating-function count (cross-checks the enumeration).
std::uint64_t weighted_monomial_count_exact(const std::vector<int>& weights, int d);
std::uint64_t weighted_monomial_count_up_to(const std::vector<int>& weights, int d);

}  // namespace carnot
