#pragma once

#include <Eigen/Dense>

#include <memory>
#include <vector>

#include "carnot/group.hpp"
#include "carnot/point.hpp"
#include "carnot/vector_field.hpp"

namespace carnot {

// Scalar spacetime function with exact spatial gradient/Hessian and time
// derivative; the closed-form test data the solver experiments build on.
class SmoothFunction {
 public:
  virtual ~SmoothFunction() = default;
  virtual double value(const SpaceTimePoint& p) const = 0;
  virtual Eigen::VectorXd gradient(const SpaceTimePoint& p) const = 0;
  virtual Eigen::MatrixXd hessian(const SpaceTimePoint& p) const = 0;
  virtual double dt(const SpaceTimePoint& p) const = 0;
};

using SmoothPtr = std::shared_ptr<SmoothFunction>;

// Polynomial as a smooth function (derivative polynomials precomputed).
SmoothPtr smooth_polynomial(const CarnotGroup& g, const RatPoly& p);

// (G(x) + t^{r!})^{beta/(2 r!)} where G is the gauge polynomial
// sum |x_{i,k}|^{2r!/k}; all exponents are even for step >= 2, so the
// function is smooth away from the origin and parabolically homogeneous of
// degree beta. For step 1 the squared form (G^2 + t^2)^{beta/4} is used.
SmoothPtr smooth_gauge_power(const CarnotGroup& g, double beta);

SmoothPtr smooth_sum(const std::vector<std::pair<double, SmoothPtr>>& terms);

// exp(c . x) restricted to first-layer coordinates; handy smooth control.
SmoothPtr smooth_exp_linear(const CarnotGroup& g, const std::vector<double>& horizontal_coeffs);

// Evaluates horizontal derivatives of a SmoothFunction through the fields:
// X_i u and X_i X_j u from the Euclidean gradient/Hessian.
class HorizontalOps {
 public:
  HorizontalOps(const CarnotGroup& g, const std::vector<PolyVectorField>& horizontal);

  double xi(const SmoothFunction& u, int i, const SpaceTimePoint& p) const;
  double xixj(const SmoothFunction& u, int i, int j, const SpaceTimePoint& p) const;
  // All second derivatives at once (shares the Hessian evaluation).
  Eigen::MatrixXd second_matrix(const SmoothFunction& u, const SpaceTimePoint& p) const;

  const CarnotGroup& group() const { return *group_; }
  int m1() const { return m1_; }

 private:
  const CarnotGroup* group_;
  int m1_;
  std::vector<std::vector<Polynomial<double>>> b_;      // [i][m]
  std::vector<std::vector<std::vector<Polynomial<double>>>> xib_;  // [i][j][m] = X_i b_j^m
};

}  // namespace carnot
