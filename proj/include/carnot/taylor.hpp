#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "carnot/basis.hpp"
#include "carnot/group.hpp"
#include "carnot/point.hpp"
#include "carnot/vector_field.hpp"

namespace carnot {

// Stratified Taylor polynomial of order k about the origin. For polynomial
// input the weighted truncation already matches every derivative
// X^I D_t^l of homogeneous order <= k at 0.
RatPoly taylor_polynomial(const CarnotGroup& g, const RatPoly& f, int k);

using SpaceTimeFn = std::function<double(const SpaceTimePoint&)>;

// Nested central differences along group directions: X^I D_t^l f at a
// point, stepping along s -> p * (s e_i) for each field. Second-order in h.
double group_derivative_fd(const CarnotGroup& g, const SpaceTimeFn& f, const DerivativeMultiIndex& d,
                           const SpaceTimePoint& at, double h);

// Square linear system tying the coefficients of P_k to a spanning set of
// derivative functionals X^I D_t^l at the origin.
class TaylorSystem {
 public:
  TaylorSystem(const CarnotGroup& g, int k);

  const PolySpaceBasis& basis() const { return basis_; }
  const std::vector<DerivativeMultiIndex>& functionals() const { return functionals_; }

  // Exact interpolation from functional values (same order as functionals()).
  RatPoly interpolate(const std::vector<Rational>& values) const;

  // Symbolic projection of a polynomial through the functional system;
  // equals the weighted truncation (tested, not assumed).
  RatPoly project(const RatPoly& f) const;

  // Numeric path: functional values estimated by nested group central
  // differences of step h.
  Polynomial<double> from_function(const CarnotGroup& g, const SpaceTimeFn& f, double h) const;

 private:
  const CarnotGroup* group_;
  int order_;
  PolySpaceBasis basis_;
  std::vector<DerivativeMultiIndex> functionals_;
  std::vector<std::vector<Rational>> matrix_;  // dim x dim, rows = functionals
};

struct TaylorConstantReport {
  std::vector<double> radii;
  std::vector<double> ratios;      // sup |f-P_k| / (rho^k * modulus)
  std::vector<double> numerators;  // sup |f-P_k| on the shell
  std::vector<double> moduli;      // modulus of continuity of the top derivatives
  double trend_factor = 0.0;       // max/min of the nonzero ratios
};

// Empirical Taylor-inequality constant over shells gauge in [rho/2, rho].
// `top_derivative` evaluates X^I D_t^l f for |I|+2l = k.
TaylorConstantReport empirical_taylor_constant(
    const CarnotGroup& g, int k, const SpaceTimeFn& f, const Polynomial<double>& taylor_k,
    const std::function<double(const DerivativeMultiIndex&, const SpaceTimePoint&)>& top_derivative,
    const std::vector<double>& radii, int samples_per_radius, std::uint64_t seed, double b = 1.0);

// Parabolic mean-value quotient sup |f - f(0)| / (rho * sup |X_i f|).
TaylorConstantReport empirical_mvt_constant(
    const CarnotGroup& g, const SpaceTimeFn& f,
    const std::function<double(int, const SpaceTimePoint&)>& xi_f, const std::vector<double>& radii,
    int samples_per_radius, std::uint64_t seed, double b = 1.0);

}  // namespace carnot
