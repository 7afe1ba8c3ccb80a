#pragma once

#include <cstdint>
#include <vector>

#include "carnot/group.hpp"
#include "carnot/point.hpp"

namespace carnot {

// Homogeneous gauge norm |x| = (sum_k sum_i |x_{i,k}|^{2r!/k})^{1/(2r!)}.
// The inner sum runs over the full layer (i = 1..m_k).
double gauge_norm(const CarnotGroup& g, const GroupPoint& p);

// d(p,q) = |p q^{-1}|
double gauge_distance(const CarnotGroup& g, const GroupPoint& p, const GroupPoint& q);

// d_p((x,t),(y,s)) = (d(x,y)^2 + |t-s|)^{1/2}
double parabolic_distance(const CarnotGroup& g, const SpaceTimePoint& a, const SpaceTimePoint& b);

// Parabolic distance to the spacetime origin.
double parabolic_gauge(const CarnotGroup& g, const SpaceTimePoint& a);

// d_p(a,b) / (d_p(a,c) + d_p(c,b)); 0/0 reported as 0.
double quasi_triangle_ratio(const CarnotGroup& g, const SpaceTimePoint& a, const SpaceTimePoint& b,
                            const SpaceTimePoint& c);

struct QuasiTriangleEstimate {
  double sampled_sup = 0.0;  // sup over the raw sample stream (monotone in count)
  double refined = 0.0;      // after local polish around the best triples
  SpaceTimePoint best_a, best_b, best_c;
  std::uint64_t samples = 0;
};

// Empirical estimate of the quasi-triangle constant: triples sampled with
// coordinates uniform in [-1,1] per weight-scaled box; each worker also
// probes the degenerate triple c=b, whose ratio 1 is always attained.
// Samples are split over fixed logical workers with derived seeds, so the
// result does not depend on the thread count.
QuasiTriangleEstimate estimate_quasi_triangle_constant(const CarnotGroup& g, std::uint64_t sample_count,
                                                       std::uint64_t seed, int workers = 8,
                                                       int polish_steps = 6000);

struct CylinderMeasureCheck {
  double estimated_ratio = 0.0;  // |Q_r| / |Q_1|, Monte Carlo
  double expected = 0.0;         // r^(Q+2)
  double std_error = 0.0;
  double hit_fraction_r = 0.0;
  double hit_fraction_1 = 0.0;
};

// MC volume of the parabolic cylinder via uniform sampling of the
// weight-scaled bounding box of each cylinder.
CylinderMeasureCheck cylinder_measure_check(const CarnotGroup& g, double r, std::uint64_t mc_samples,
                                            std::uint64_t seed, int workers = 8);

// splitmix64; used everywhere a child seed is derived from (seed, index).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace carnot
