#include "carnot/basis.hpp"

#include <algorithm>
#include <stdexcept>

namespace carnot {

namespace {

void enumerate(const CarnotGroup& g, int d, bool homogeneous_only, std::vector<Monomial>& out) {
  int n = g.dim();
  Monomial current(n);
  // Depth-first over coordinates, then the time exponent.
  std::function<void(int, int)> rec = [&](int coord, int budget) {
    if (coord == n) {
      for (int st = 0; 2 * st <= budget; ++st) {
        Monomial m = current;
        m.st = st;
        if (!homogeneous_only || m.weighted_degree(g.weights()) == d) out.push_back(m);
      }
      return;
    }
    int w = g.weight(coord);
    for (int e = 0; e * w <= budget; ++e) {
      current.sx[coord] = e;
      rec(coord + 1, budget - e * w);
    }
    current.sx[coord] = 0;
  };
  rec(0, d);
  std::sort(out.begin(), out.end(), [&](const Monomial& a, const Monomial& b) {
    int da = a.weighted_degree(g.weights());
    int db = b.weighted_degree(g.weights());
    if (da != db) return da < db;
    if (a.sx != b.sx) return a.sx < b.sx;
    return a.st < b.st;
  });
}

}  // namespace

PolySpaceBasis PolySpaceBasis::up_to_degree(const CarnotGroup& g, int d) {
  PolySpaceBasis b;
  b.degree_cap_ = d;
  enumerate(g, d, false, b.monomials_);
  for (int i = 0; i < b.dim(); ++i) b.index_.emplace(b.monomials_[i], i);
  return b;
}

PolySpaceBasis PolySpaceBasis::homogeneous(const CarnotGroup& g, int d) {
  PolySpaceBasis b;
  b.degree_cap_ = d;
  enumerate(g, d, true, b.monomials_);
  for (int i = 0; i < b.dim(); ++i) b.index_.emplace(b.monomials_[i], i);
  return b;
}

std::vector<Rational> PolySpaceBasis::coefficients_of(const RatPoly& p) const {
  std::vector<Rational> c(dim(), Rational(0));
  for (const auto& [m, coeff] : p.terms()) {
    int i = index_of(m);
    if (i < 0) throw std::invalid_argument("polynomial has a monomial outside the basis");
    c[i] = coeff;
  }
  return c;
}

RatPoly PolySpaceBasis::to_polynomial(const std::vector<Rational>& coeffs, int nvars) const {
  if (static_cast<int>(coeffs.size()) != dim()) throw std::invalid_argument("coefficient size mismatch");
  RatPoly p(nvars);
  for (int i = 0; i < dim(); ++i) p.add_term(monomials_[i], coeffs[i]);
  return p;
}

std::uint64_t weighted_monomial_count_exact(const std::vector<int>& weights, int d) {
  // Generating function: product over variables of 1/(1-z^w), times
  // 1/(1-z^2) for the time variable; coefficient of z^d.
  std::vector<std::uint64_t> dp(d + 1, 0);
  dp[0] = 1;
  auto mul_geom = [&](int w) {
    for (int k = w; k <= d; ++k) dp[k] += dp[k - w];
  };
  for (int w : weights) mul_geom(w);
  mul_geom(2);  // time
  return dp[d];
}

std::uint64_t weighted_monomial_count_up_to(const std::vector<int>& weights, int d) {
  std::uint64_t total = 0;
  for (int k = 0; k <= d; ++k) total += weighted_monomial_count_exact(weights, k);
  return total;
}

}  // namespace carnot
