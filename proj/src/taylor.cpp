#include "carnot/taylor.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "carnot/geometry.hpp"
#include "carnot/linalg_rational.hpp"

namespace carnot {

RatPoly taylor_polynomial(const CarnotGroup& g, const RatPoly& f, int k) {
  return f.truncate_weighted(g.weights(), k);
}

double group_derivative_fd(const CarnotGroup& g, const SpaceTimeFn& f, const DerivativeMultiIndex& d,
                           const SpaceTimePoint& at, double h) {
  if (d.time_order > 0) {
    DerivativeMultiIndex lower = d;
    lower.time_order -= 1;
    double tau = h * h;  // time step keeps parabolic scaling
    SpaceTimePoint plus = at, minus = at;
    plus.t += tau;
    minus.t -= tau;
    return (group_derivative_fd(g, f, lower, plus, h) - group_derivative_fd(g, f, lower, minus, h)) /
           (2.0 * tau);
  }
  if (d.word.empty()) return f(at);
  DerivativeMultiIndex rest;
  rest.word.assign(d.word.begin() + 1, d.word.end());
  int i = d.word.front();
  GroupPoint step(g.dim());
  step[i] = h;
  SpaceTimePoint plus(g.multiply(at.x, step), at.t);
  step[i] = -h;
  SpaceTimePoint minus(g.multiply(at.x, step), at.t);
  return (group_derivative_fd(g, f, rest, plus, h) - group_derivative_fd(g, f, rest, minus, h)) /
         (2.0 * h);
}

TaylorSystem::TaylorSystem(const CarnotGroup& g, int k)
    : group_(&g), order_(k), basis_(PolySpaceBasis::up_to_degree(g, k)) {
  auto horizontal = horizontal_fields(g);
  int dim = basis_.dim();
  std::vector<Rational> origin(g.dim(), Rational(0));

  auto functional_row = [&](const DerivativeMultiIndex& d) {
    std::vector<Rational> row(dim);
    for (int j = 0; j < dim; ++j) {
      RatPoly mono(g.dim());
      mono.add_term(basis_.monomial(j), Rational(1));
      RatPoly der = apply_derivative(mono, d, horizontal);
      Rational val(0);
      for (const auto& [m, c] : der.terms())
        if (m.st == 0 && m.weighted_degree(g.weights()) == 0) val = c;
      row[j] = val;
    }
    return row;
  };

  // Greedy selection of a spanning functional set, scanning words by
  // homogeneous order. Incremental row reduction keeps the scan cheap.
  std::vector<std::vector<Rational>> reduced;
  std::vector<int> pivots;
  auto try_add = [&](std::vector<Rational> row) {
    for (std::size_t r = 0; r < reduced.size(); ++r) {
      const Rational& f = row[pivots[r]];
      if (f.is_zero()) continue;
      Rational factor = f;
      for (int c = 0; c < dim; ++c) row[c] -= factor * reduced[r][c];
    }
    int pivot = -1;
    for (int c = 0; c < dim; ++c)
      if (!row[c].is_zero()) {
        pivot = c;
        break;
      }
    if (pivot < 0) return false;
    Rational inv = Rational(1) / row[pivot];
    for (int c = 0; c < dim; ++c) row[c] *= inv;
    reduced.push_back(std::move(row));
    pivots.push_back(pivot);
    return true;
  };

  for (const auto& d : derivative_words_up_to(g.horizontal_dim(), k)) {
    if (static_cast<int>(functionals_.size()) == dim) break;
    auto row = functional_row(d);
    if (try_add(row)) {
      functionals_.push_back(d);
      matrix_.push_back(functional_row(d));
    }
  }
  if (static_cast<int>(functionals_.size()) != dim)
    throw std::runtime_error("derivative functionals fail to span P_k (internal error)");
}

RatPoly TaylorSystem::interpolate(const std::vector<Rational>& values) const {
  int dim = basis_.dim();
  if (static_cast<int>(values.size()) != dim) throw std::invalid_argument("functional value count mismatch");
  RatMatrix a(dim, dim);
  for (int r = 0; r < dim; ++r)
    for (int c = 0; c < dim; ++c) a(r, c) = matrix_[r][c];
  auto coeffs = solve_square(a, values);
  return basis_.to_polynomial(coeffs, group_->dim());
}

RatPoly TaylorSystem::project(const RatPoly& f) const {
  auto horizontal = horizontal_fields(*group_);
  std::vector<Rational> values;
  values.reserve(functionals_.size());
  for (const auto& d : functionals_) {
    RatPoly der = apply_derivative(f, d, horizontal);
    Rational val(0);
    for (const auto& [m, c] : der.terms())
      if (m.st == 0 && m.weighted_degree(group_->weights()) == 0) val = c;
    values.push_back(val);
  }
  return interpolate(values);
}

Polynomial<double> TaylorSystem::from_function(const CarnotGroup& g, const SpaceTimeFn& f, double h) const {
  int dim = basis_.dim();
  Eigen::MatrixXd a(dim, dim);
  Eigen::VectorXd rhs(dim);
  SpaceTimePoint origin(GroupPoint(g.dim()), 0.0);
  for (int r = 0; r < dim; ++r) {
    for (int c = 0; c < dim; ++c) a(r, c) = to_double(matrix_[r][c]);
    rhs(r) = group_derivative_fd(g, f, functionals_[r], origin, h);
  }
  Eigen::VectorXd coeffs = a.colPivHouseholderQr().solve(rhs);
  Polynomial<double> p(g.dim());
  for (int j = 0; j < dim; ++j)
    if (coeffs(j) != 0.0) p.add_term(basis_.monomial(j), coeffs(j));
  return p;
}

namespace {

// Uniform point on the shell gauge in [rho/2, rho] by rejection from the
// weight-scaled box.
SpaceTimePoint sample_shell(const CarnotGroup& g, double rho, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int tries = 0; tries < 100000; ++tries) {
    GroupPoint p(g.dim());
    for (int i = 0; i < g.dim(); ++i) p[i] = u(rng) * std::pow(rho, g.weight(i));
    double t = u(rng) * rho * rho;
    SpaceTimePoint pt(std::move(p), t);
    double d = parabolic_gauge(g, pt);
    if (d <= rho && d >= 0.5 * rho) return pt;
  }
  throw std::runtime_error("shell sampling failed to accept a point");
}

SpaceTimePoint sample_ball(const CarnotGroup& g, double rho, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int tries = 0; tries < 100000; ++tries) {
    GroupPoint p(g.dim());
    for (int i = 0; i < g.dim(); ++i) p[i] = u(rng) * std::pow(rho, g.weight(i));
    double t = u(rng) * rho * rho;
    SpaceTimePoint pt(std::move(p), t);
    if (parabolic_gauge(g, pt) <= rho) return pt;
  }
  throw std::runtime_error("ball sampling failed to accept a point");
}

double finalize_trend(TaylorConstantReport& rep) {
  double lo = 0.0, hi = 0.0;
  for (double r : rep.ratios) {
    if (r <= 0.0) continue;
    if (lo == 0.0 || r < lo) lo = r;
    if (r > hi) hi = r;
  }
  rep.trend_factor = (lo > 0.0) ? hi / lo : 0.0;
  return rep.trend_factor;
}

}  // namespace

TaylorConstantReport empirical_taylor_constant(
    const CarnotGroup& g, int k, const SpaceTimeFn& f, const Polynomial<double>& taylor_k,
    const std::function<double(const DerivativeMultiIndex&, const SpaceTimePoint&)>& top_derivative,
    const std::vector<double>& radii, int samples_per_radius, std::uint64_t seed, double b) {
  TaylorConstantReport rep;
  auto top_words = derivative_words_of_order(g.horizontal_dim(), k);
  SpaceTimePoint origin(GroupPoint(g.dim()), 0.0);
  std::vector<double> top_at_origin;
  top_at_origin.reserve(top_words.size());
  for (const auto& w : top_words) top_at_origin.push_back(top_derivative(w, origin));

  for (std::size_t ri = 0; ri < radii.size(); ++ri) {
    double rho = radii[ri];
    std::mt19937_64 rng(derive_seed(seed, ri));
    double numerator = 0.0;
    for (int s = 0; s < samples_per_radius; ++s) {
      SpaceTimePoint pt = sample_shell(g, rho, rng);
      double err = std::fabs(f(pt) - taylor_k.eval(pt.x.coords, pt.t));
      double gauge = parabolic_gauge(g, pt);
      numerator = std::max(numerator, err / std::pow(gauge, k));
    }
    double modulus = 0.0;
    double ball = std::pow(b, k) * rho;
    for (int s = 0; s < samples_per_radius; ++s) {
      SpaceTimePoint pt = sample_ball(g, ball, rng);
      for (std::size_t w = 0; w < top_words.size(); ++w)
        modulus = std::max(modulus, std::fabs(top_derivative(top_words[w], pt) - top_at_origin[w]));
    }
    rep.radii.push_back(rho);
    rep.numerators.push_back(numerator);
    rep.moduli.push_back(modulus);
    rep.ratios.push_back(modulus > 0.0 ? numerator / modulus : 0.0);
  }
  finalize_trend(rep);
  return rep;
}

TaylorConstantReport empirical_mvt_constant(
    const CarnotGroup& g, const SpaceTimeFn& f,
    const std::function<double(int, const SpaceTimePoint&)>& xi_f, const std::vector<double>& radii,
    int samples_per_radius, std::uint64_t seed, double b) {
  TaylorConstantReport rep;
  SpaceTimePoint origin(GroupPoint(g.dim()), 0.0);
  double f0 = f(origin);
  for (std::size_t ri = 0; ri < radii.size(); ++ri) {
    double rho = radii[ri];
    std::mt19937_64 rng(derive_seed(seed, ri));
    double numerator = 0.0;
    for (int s = 0; s < samples_per_radius; ++s) {
      SpaceTimePoint pt = sample_shell(g, rho, rng);
      double gauge = parabolic_gauge(g, pt);
      numerator = std::max(numerator, std::fabs(f(pt) - f0) / gauge);
    }
    double modulus = 0.0;
    for (int s = 0; s < samples_per_radius; ++s) {
      SpaceTimePoint pt = sample_ball(g, b * rho, rng);
      for (int i = 0; i < g.horizontal_dim(); ++i)
        modulus = std::max(modulus, std::fabs(xi_f(i, pt)));
    }
    rep.radii.push_back(rho);
    rep.numerators.push_back(numerator);
    rep.moduli.push_back(modulus);
    rep.ratios.push_back(modulus > 0.0 ? numerator / modulus : 0.0);
  }
  finalize_trend(rep);
  return rep;
}

}  // namespace carnot
