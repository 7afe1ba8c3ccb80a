#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "carnot/geometry.hpp"
#include "carnot/group.hpp"
#include "carnot/point.hpp"

namespace carnot {

using DomainPredicate = std::function<bool(const SpaceTimePoint&)>;

// Uniform-measure sample of Q_r(center) intersected with an optional
// domain. Points come from rejection sampling of the weight-scaled
// bounding box; every accepted point carries the same weight
// box_volume / draws, so total_weight estimates |Q_r ∩ Ω|.
struct SampleCloud {
  std::vector<SpaceTimePoint> points;
  double weight_per_point = 0.0;
  double total_weight = 0.0;
  double radius = 0.0;
  std::uint64_t draws = 0;
  std::uint64_t seed = 0;
};

struct SamplerOptions {
  bool low_discrepancy = false;  // Halton instead of mt19937_64
};

SampleCloud sample_cylinder(const CarnotGroup& g, const Cylinder& cyl, std::uint64_t draws,
                            std::uint64_t seed, const DomainPredicate& domain = nullptr,
                            const SamplerOptions& opt = {});

// Offsets of a unit cloud pushed to radius r by the parabolic dilation;
// used to couple the clouds across a radius schedule.
SampleCloud dilate_cloud(const CarnotGroup& g, const SampleCloud& unit_cloud, double r,
                         const SpaceTimePoint& center, const DomainPredicate& domain = nullptr);

// Monte Carlo estimate of |Q_r(center) ∩ Ω| / |Q_r(center)| (the A-property
// constant for the pair).
double cylinder_intersection_fraction(const CarnotGroup& g, const Cylinder& cyl,
                                      const DomainPredicate& domain, std::uint64_t draws,
                                      std::uint64_t seed);

}  // namespace carnot
