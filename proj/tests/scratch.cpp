#include <cstdio>
#include <cmath>
#include "carnot/group.hpp"
#include "carnot/geometry.hpp"
#include "carnot/vector_field.hpp"
#include "carnot/campanato.hpp"
#include "carnot/solver.hpp"
#include "carnot/smooth.hpp"
using namespace carnot;

int main() {
  auto g = CarnotGroup::build(heisenberg_law_spec(1));
  auto horiz = horizontal_fields(g);
  auto fs = FieldSet::from(g, horiz);

  // Manufactured linear solution u* = x1 (f = 0): expect exact reproduction.
  RatPoly ustar(3);
  Monomial mx(3); mx.sx = {1,0,0};
  ustar.add_term(mx, Rational(1));
  auto u_smooth = smooth_polynomial(g, ustar);
  auto A = CoefficientField::identity(2);
  auto f = manufactured_rhs(g, horiz, A, u_smooth);
  SpaceTimeFn data = [&](const SpaceTimePoint& p){ return u_smooth->value(p); };
  GridSpec grid = GridSpec::covering_cylinder(g, 0.5, 13, 5);
  SolveConfig cfg;
  SolveResult res = solve(g, fs, A, f, data, grid, cfg);
  double err = 0;
  for (int lev = 0; lev < res.u.levels(); ++lev)
    for (int v = 0; v < res.u.spatial_size(); ++v) {
      auto x = res.u.node_coords(v);
      err = std::max(err, std::fabs(res.u.at(lev, v) - x[0]));
    }
  std::printf("linear repro err = %.3e (tau=%.3e steps=%llu)\n", err, res.tau, (unsigned long long)res.steps);

  // u* = t reproduction
  RatPoly ut(3); ut.add_term(Monomial(3,1), Rational(1));
  auto ut_s = smooth_polynomial(g, ut);
  auto f2 = manufactured_rhs(g, horiz, A, ut_s);
  SpaceTimeFn data2 = [&](const SpaceTimePoint& p){ return p.t; };
  SolveResult res2 = solve(g, fs, A, f2, data2, grid, cfg);
  double err2 = 0;
  for (int lev = 0; lev < res2.u.levels(); ++lev)
    for (int v = 0; v < res2.u.spatial_size(); ++v)
      err2 = std::max(err2, std::fabs(res2.u.at(lev, v) - res2.u.level_time(lev)));
  std::printf("u*=t repro err = %.3e\n", err2);

  // Campanato: u in P_d -> seminorm ~ 0; gauge power slope check
  NormQuery q;
  q.p = 2; q.alpha = 0.5; q.d = 2; q.center = SpaceTimePoint(GroupPoint(3), 0.0);
  q.radii = {0.5, 0.25, 0.125, 0.0625, 0.03125};
  auto phi = smooth_gauge_power(g, 2.5);
  SpaceTimeFn uphi = [&](const SpaceTimePoint& p){ return phi->value(p); };
  CampanatoOptions opt; opt.draws_per_radius = 20000;
  auto rep = campanato_seminorm(g, uphi, q, nullptr, 42, opt);
  std::printf("gauge^2.5 slope = %.4f (stderr %.2e), seminorm=%.4f\n", rep.slope, rep.slope_stderr, rep.seminorm);

  RatPoly inP(3); inP.add_term(mx, Rational(2)); inP.add_term(Monomial(3,1), Rational(-3));
  auto inPs = smooth_polynomial(g, inP);
  SpaceTimeFn uin = [&](const SpaceTimePoint& p){ return inPs->value(p); };
  auto rep2 = campanato_seminorm(g, uin, q, nullptr, 42, opt);
  std::printf("P_d member seminorm = %.3e\n", rep2.seminorm);
  return 0;
}
