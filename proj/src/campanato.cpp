#include "carnot/campanato.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "carnot/linalg_rational.hpp"

namespace carnot {

void NormQuery::validate() const {
  if (!(p > 1.0)) throw std::invalid_argument("norm exponent must satisfy p > 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0,1)");
  if (d < 0) throw std::invalid_argument("degree cap must be nonnegative");
  if (radii.size() < 1) throw std::invalid_argument("radius schedule is empty");
  for (double r : radii)
    if (!(r > 0.0 && r <= 1.0)) throw std::invalid_argument("radii must lie in (0,1]");
}

namespace {

// Design matrix of the P_d monomials in left-translated coordinates
// y = center^{-1} * x, tau = t - t0. P_d is invariant under left
// translation, so the fitted space is unchanged and the columns stay
// well-scaled near the center.
Eigen::MatrixXd design_matrix(const CarnotGroup& g, const PolySpaceBasis& basis,
                              const std::vector<SpaceTimePoint>& pts, const SpaceTimePoint& center) {
  Eigen::MatrixXd phi(pts.size(), basis.dim());
  GroupPoint cinv = g.inverse(center.x);
  for (std::size_t s = 0; s < pts.size(); ++s) {
    GroupPoint y = g.multiply(cinv, pts[s].x);
    double tau = pts[s].t - center.t;
    for (int j = 0; j < basis.dim(); ++j) {
      const Monomial& m = basis.monomial(j);
      double v = 1.0;
      for (int i = 0; i < g.dim(); ++i)
        for (int e = 0; e < m.sx[i]; ++e) v *= y[i];
      for (int e = 0; e < m.st; ++e) v *= tau;
      phi(s, j) = v;
    }
  }
  return phi;
}

Polynomial<double> poly_from_coeffs(const CarnotGroup& g, const PolySpaceBasis& basis,
                                    const Eigen::VectorXd& c) {
  Polynomial<double> p(g.dim());
  for (int j = 0; j < basis.dim(); ++j)
    if (c(j) != 0.0) p.add_term(basis.monomial(j), c(j));
  return p;
}

double lp_mean(const Eigen::VectorXd& resid, double p) {
  double mean = 0.0;
  for (Eigen::Index i = 0; i < resid.size(); ++i)
    mean += std::pow(std::fabs(resid(i)), p);
  mean /= static_cast<double>(resid.size());
  return std::pow(mean, 1.0 / p);
}

}  // namespace

BestPolyResult best_polynomial(const CarnotGroup& g, const SampleCloud& cloud,
                               const std::vector<double>& values, int d, double p,
                               const SpaceTimePoint& center) {
  if (cloud.points.size() != values.size())
    throw std::invalid_argument("cloud/value size mismatch");
  PolySpaceBasis basis = PolySpaceBasis::up_to_degree(g, d);
  if (static_cast<int>(cloud.points.size()) < basis.dim())
    throw std::invalid_argument("not enough samples for the polynomial space");

  bool p_inf = std::isinf(p);
  double p_eff = p_inf ? 64.0 : p;

  Eigen::MatrixXd phi = design_matrix(g, basis, cloud.points, center);
  Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(values.data(), values.size());

  BestPolyResult out;
  Eigen::VectorXd c = phi.colPivHouseholderQr().solve(y);
  if (phi.colPivHouseholderQr().rank() < basis.dim())
    throw std::runtime_error("rank-deficient design matrix (degenerate sample cloud)");
  Eigen::VectorXd resid = y - phi * c;

  if (p_eff != 2.0) {
    // IRLS with weights |r|^{p-2}, floored to keep the system well posed.
    double obj = lp_mean(resid, p_eff);
    out.objective_trace.push_back(obj);
    double scale = std::max(1e-300, resid.cwiseAbs().maxCoeff());
    for (int it = 0; it < 100; ++it) {
      Eigen::VectorXd w(resid.size());
      for (Eigen::Index i = 0; i < resid.size(); ++i) {
        double r = std::max(std::fabs(resid(i)), 1e-10 * scale);
        w(i) = std::pow(r, (p_eff - 2.0) / 2.0);  // sqrt of IRLS weight
      }
      Eigen::MatrixXd wphi = w.asDiagonal() * phi;
      Eigen::VectorXd wy = w.asDiagonal() * y;
      Eigen::VectorXd cnew = wphi.colPivHouseholderQr().solve(wy);
      // Damped update keeps the objective monotone for p > 2.
      double step = 1.0;
      Eigen::VectorXd best_c = c;
      double best_obj = obj;
      for (int ls = 0; ls < 12; ++ls) {
        Eigen::VectorXd trial = c + step * (cnew - c);
        double trial_obj = lp_mean(y - phi * trial, p_eff);
        if (trial_obj < best_obj) {
          best_obj = trial_obj;
          best_c = trial;
          break;
        }
        step *= 0.5;
      }
      double rel = std::fabs(obj - best_obj) / std::max(obj, 1e-300);
      c = best_c;
      obj = best_obj;
      resid = y - phi * c;
      out.objective_trace.push_back(obj);
      out.iterations = it + 1;
      if (rel < 1e-8) break;
    }
  }

  out.poly = poly_from_coeffs(g, basis, c);
  out.error = lp_mean(resid, p_eff);
  if (p_inf) {
    double sup = resid.cwiseAbs().maxCoeff();
    out.surrogate_gap = out.error > 0.0 ? sup / out.error : 1.0;
    out.error = sup;
  }
  return out;
}

ExactBestPoly best_polynomial_exact(const CarnotGroup& g,
                                    const std::vector<std::vector<Rational>>& xs,
                                    const std::vector<Rational>& ts,
                                    const std::vector<Rational>& values, int d) {
  PolySpaceBasis basis = PolySpaceBasis::up_to_degree(g, d);
  int cols = basis.dim();
  int rows = static_cast<int>(xs.size());
  if (rows < cols) throw std::invalid_argument("not enough samples for the polynomial space");
  RatMatrix phi(rows, cols);
  for (int s = 0; s < rows; ++s)
    for (int j = 0; j < cols; ++j) {
      const Monomial& m = basis.monomial(j);
      Rational v(1);
      for (int i = 0; i < g.dim(); ++i)
        for (int e = 0; e < m.sx[i]; ++e) v *= xs[s][i];
      for (int e = 0; e < m.st; ++e) v *= ts[s];
      phi(s, j) = v;
    }
  RatMatrix pt = phi.transposed();
  RatMatrix gram = pt * phi;
  std::vector<Rational> rhs = pt.apply(values);
  std::vector<Rational> c = solve_square(gram, rhs);
  ExactBestPoly out;
  out.poly = basis.to_polynomial(c, g.dim());
  std::vector<Rational> fit = phi.apply(c);
  out.residual_sq = 0;
  for (int s = 0; s < rows; ++s) {
    Rational r = values[s] - fit[s];
    out.residual_sq += r * r;
  }
  return out;
}

std::pair<double, double> decay_slope(const std::vector<double>& radii,
                                      const std::vector<double>& errors) {
  if (radii.size() != errors.size()) throw std::invalid_argument("radius/error size mismatch");
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (errors[i] > 0.0 && radii[i] > 0.0) {
      xs.push_back(std::log(radii[i]));
      ys.push_back(std::log(errors[i]));
    }
  }
  std::size_t n = xs.size();
  if (n < 3) throw std::invalid_argument("decay slope needs at least 3 positive entries");
  double xm = 0, ym = 0;
  for (std::size_t i = 0; i < n; ++i) {
    xm += xs[i];
    ym += ys[i];
  }
  xm /= n;
  ym /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - xm) * (xs[i] - xm);
    sxy += (xs[i] - xm) * (ys[i] - ym);
  }
  if (sxx == 0.0) throw std::invalid_argument("degenerate radii for slope fit");
  double slope = sxy / sxx;
  double ssr = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double fit = ym + slope * (xs[i] - xm);
    ssr += (ys[i] - fit) * (ys[i] - fit);
  }
  double stderr_ = n > 2 ? std::sqrt(ssr / static_cast<double>(n - 2) / sxx) : 0.0;
  return {slope, stderr_};
}

CampanatoReport campanato_seminorm(const CarnotGroup& g, const SpaceTimeFn& u, const NormQuery& q,
                                   const DomainPredicate& domain, std::uint64_t seed,
                                   const CampanatoOptions& opt) {
  q.validate();
  CampanatoReport rep;
  SampleCloud unit;
  if (opt.couple_radii) {
    SpaceTimePoint origin(GroupPoint(g.dim()), 0.0);
    unit = sample_cylinder(g, Cylinder(origin, 1.0), opt.draws_per_radius, seed, nullptr, opt.sampler);
  }
  for (std::size_t ri = 0; ri < q.radii.size(); ++ri) {
    double r = q.radii[ri];
    SampleCloud cloud =
        opt.couple_radii
            ? dilate_cloud(g, unit, r, q.center, domain)
            : sample_cylinder(g, Cylinder(q.center, r), opt.draws_per_radius, derive_seed(seed, ri),
                              domain, opt.sampler);
    std::vector<double> values(cloud.points.size());
    for (std::size_t s = 0; s < cloud.points.size(); ++s) values[s] = u(cloud.points[s]);
    BestPolyResult best = best_polynomial(g, cloud, values, q.d, q.p, q.center);
    RadiusEntry entry;
    entry.r = r;
    entry.error = best.error;
    entry.quotient = std::pow(r, -q.alpha) * best.error;
    entry.samples = cloud.points.size();
    entry.best_poly = best.poly;
    rep.seminorm = std::max(rep.seminorm, entry.quotient);
    rep.entries.push_back(std::move(entry));
  }
  std::vector<double> radii, errors;
  for (const auto& e : rep.entries) {
    radii.push_back(e.r);
    errors.push_back(e.error);
  }
  try {
    auto [slope, stderr_] = decay_slope(radii, errors);
    rep.slope = slope;
    rep.slope_stderr = stderr_;
  } catch (const std::invalid_argument&) {
    rep.slope = 0.0;
    rep.slope_stderr = std::numeric_limits<double>::quiet_NaN();
  }
  return rep;
}

std::string CampanatoReport::csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "r,error,quotient,samples,slope,slope_stderr\n";
  for (const auto& e : entries)
    out << e.r << "," << e.error << "," << e.quotient << "," << e.samples << "," << slope << ","
        << slope_stderr << "\n";
  return out.str();
}

HolderQuotientReport holder_quotient(const CarnotGroup& g, const SpaceTimeFn& f,
                                     const SpaceTimePoint& center, double alpha,
                                     const std::vector<double>& radii, std::uint64_t draws,
                                     std::uint64_t seed) {
  HolderQuotientReport rep;
  double fc = f(center);
  for (std::size_t ri = 0; ri < radii.size(); ++ri) {
    double r = radii[ri];
    SampleCloud cloud = sample_cylinder(g, Cylinder(center, r), draws, derive_seed(seed, ri));
    double sup = 0.0;
    for (const auto& pt : cloud.points) {
      double d = parabolic_distance(g, pt, center);
      if (d == 0.0) continue;
      sup = std::max(sup, std::fabs(f(pt) - fc) / std::pow(d, alpha));
    }
    rep.radii.push_back(r);
    rep.quotients.push_back(sup);
    rep.sup = std::max(rep.sup, sup);
  }
  return rep;
}

EmbeddingReport embedding_check(const CarnotGroup& g,
                                const std::vector<std::pair<std::string, SpaceTimeFn>>& family,
                                const NormQuery& q, const DomainPredicate& domain,
                                std::uint64_t seed, const CampanatoOptions& opt) {
  EmbeddingReport rep;
  for (std::size_t i = 0; i < family.size(); ++i) {
    EmbeddingMember m;
    m.name = family[i].first;
    auto hq = holder_quotient(g, family[i].second, q.center, q.alpha, q.radii,
                              opt.draws_per_radius, derive_seed(seed, 2 * i));
    m.holder = hq.sup;
    auto camp = campanato_seminorm(g, family[i].second, q, domain, derive_seed(seed, 2 * i + 1), opt);
    m.campanato = camp.seminorm;
    m.ratio = m.campanato > 0.0 ? m.holder / m.campanato : 0.0;
    rep.max_ratio = std::max(rep.max_ratio, m.ratio);
    rep.members.push_back(std::move(m));
  }
  // A-property of the domain across sampled sub-cylinder centers.
  rep.a_property_min = 1.0;
  if (domain) {
    SpaceTimePoint origin(GroupPoint(g.dim()), 0.0);
    SampleCloud centers = sample_cylinder(g, Cylinder(origin, 1.0), 64, derive_seed(seed, 0x4b));
    for (const auto& c : centers.points) {
      for (double r : q.radii) {
        double frac = cylinder_intersection_fraction(g, Cylinder(c, r), domain, 4000,
                                                     derive_seed(seed, 0x4c));
        rep.a_property_min = std::min(rep.a_property_min, frac);
      }
    }
  }
  return rep;
}

}  // namespace carnot
