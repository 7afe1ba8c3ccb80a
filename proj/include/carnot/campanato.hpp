#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "carnot/basis.hpp"
#include "carnot/group.hpp"
#include "carnot/sampling.hpp"

namespace carnot {

using SpaceTimeFn = std::function<double(const SpaceTimePoint&)>;

struct NormQuery {
  double p = 2.0;       // exponent in (1, inf]; infinity via surrogate
  double alpha = 0.5;   // Holder exponent in (0,1)
  int d = 0;            // polynomial degree cap
  SpaceTimePoint center;
  std::vector<double> radii;  // decreasing, within (0,1]

  void validate() const;
};

struct BestPolyResult {
  Polynomial<double> poly;
  double error = 0.0;       // (mean |u - P|^p)^(1/p) over the cloud
  int iterations = 0;       // IRLS iterations (0 for plain p=2)
  double surrogate_gap = 0.0;  // sup-error / L^64 error when p = inf
  std::vector<double> objective_trace;  // IRLS objective per iteration
};

// Best L^p approximation by polynomials of homogeneous degree <= d over a
// sample cloud. p = 2 solves the normal equations; p in (1,inf) runs IRLS
// to relative tolerance 1e-8; p = inf uses the p = 64 surrogate and
// reports the gap.
BestPolyResult best_polynomial(const CarnotGroup& g, const SampleCloud& cloud,
                               const std::vector<double>& values, int d, double p,
                               const SpaceTimePoint& center);

// Exact-arithmetic variant for rational sample points and values (p = 2).
// Returns the residual as well; zero residual certifies membership in P_d.
struct ExactBestPoly {
  RatPoly poly;
  Rational residual_sq;  // sum of squared residuals
};
ExactBestPoly best_polynomial_exact(const CarnotGroup& g,
                                    const std::vector<std::vector<Rational>>& xs,
                                    const std::vector<Rational>& ts,
                                    const std::vector<Rational>& values, int d);

struct RadiusEntry {
  double r = 0.0;
  double error = 0.0;     // best-approximation L^p mean error
  double quotient = 0.0;  // r^{-alpha} * error
  std::size_t samples = 0;
  Polynomial<double> best_poly;
};

struct CampanatoReport {
  std::vector<RadiusEntry> entries;
  double seminorm = 0.0;  // max quotient over the schedule
  double slope = 0.0;     // log-log decay slope of the error
  double slope_stderr = 0.0;
  std::string csv() const;
};

struct CampanatoOptions {
  std::uint64_t draws_per_radius = 20000;
  bool couple_radii = true;  // same unit cloud dilated per radius
  SamplerOptions sampler;
};

CampanatoReport campanato_seminorm(const CarnotGroup& g, const SpaceTimeFn& u, const NormQuery& q,
                                   const DomainPredicate& domain, std::uint64_t seed,
                                   const CampanatoOptions& opt = {});

// Ordinary least squares on (log r, log error); requires >= 3 positive
// entries.
std::pair<double, double> decay_slope(const std::vector<double>& radii,
                                      const std::vector<double>& errors);

struct HolderQuotientReport {
  std::vector<double> radii;
  std::vector<double> quotients;  // per-radius sup over samples
  double sup = 0.0;
};

HolderQuotientReport holder_quotient(const CarnotGroup& g, const SpaceTimeFn& f,
                                     const SpaceTimePoint& center, double alpha,
                                     const std::vector<double>& radii, std::uint64_t draws,
                                     std::uint64_t seed);

struct EmbeddingMember {
  std::string name;
  double holder = 0.0;
  double campanato = 0.0;
  double ratio = 0.0;
};

struct EmbeddingReport {
  std::vector<EmbeddingMember> members;
  double max_ratio = 0.0;
  double a_property_min = 0.0;  // min sampled |Q_r(x,t) ∩ Ω| / |Q_r(x,t)|
};

// Empirical check of the Campanato -> Holder embedding across a family,
// plus the A-property constant of the domain.
EmbeddingReport embedding_check(const CarnotGroup& g,
                                const std::vector<std::pair<std::string, SpaceTimeFn>>& family,
                                const NormQuery& q, const DomainPredicate& domain,
                                std::uint64_t seed, const CampanatoOptions& opt = {});

}  // namespace carnot
