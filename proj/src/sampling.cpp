#include "carnot/sampling.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace carnot {

namespace {

constexpr int kHaltonPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};

double halton(std::uint64_t index, int base) {
  double f = 1.0, r = 0.0;
  std::uint64_t i = index;
  while (i > 0) {
    f /= base;
    r += f * static_cast<double>(i % base);
    i /= base;
  }
  return r;
}

}  // namespace

SampleCloud sample_cylinder(const CarnotGroup& g, const Cylinder& cyl, std::uint64_t draws,
                            std::uint64_t seed, const DomainPredicate& domain,
                            const SamplerOptions& opt) {
  int n = g.dim();
  if (static_cast<int>(sizeof(kHaltonPrimes) / sizeof(int)) < n + 1 && opt.low_discrepancy)
    throw std::invalid_argument("low-discrepancy sampler supports up to 11 spatial coordinates");
  double r = cyl.radius;

  double box_volume = 2.0 * r * r;  // time extent
  for (int i = 0; i < n; ++i) box_volume *= 2.0 * std::pow(r, g.weight(i));

  SampleCloud cloud;
  cloud.radius = r;
  cloud.draws = draws;
  cloud.seed = seed;
  cloud.weight_per_point = box_volume / static_cast<double>(draws);

  std::mt19937_64 rng(derive_seed(seed, 0));
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  GroupPoint w(n);
  GroupPoint inv_w(n);
  for (std::uint64_t s = 0; s < draws; ++s) {
    double tloc;
    if (opt.low_discrepancy) {
      for (int i = 0; i < n; ++i)
        w[i] = (2.0 * halton(s + 1, kHaltonPrimes[i]) - 1.0) * std::pow(r, g.weight(i));
      tloc = (2.0 * halton(s + 1, kHaltonPrimes[n]) - 1.0) * r * r;
    } else {
      for (int i = 0; i < n; ++i) w[i] = (2.0 * u01(rng) - 1.0) * std::pow(r, g.weight(i));
      tloc = (2.0 * u01(rng) - 1.0) * r * r;
    }
    if (gauge_norm(g, w) >= r) continue;
    // d(center, z) = |center z^{-1}| < r  <=>  z = w^{-1} * center, |w| < r.
    for (int i = 0; i < n; ++i) inv_w[i] = -w[i];
    SpaceTimePoint pt(g.multiply(inv_w, cyl.center.x), cyl.center.t + tloc);
    if (domain && !domain(pt)) continue;
    cloud.points.push_back(std::move(pt));
  }
  cloud.total_weight = cloud.weight_per_point * static_cast<double>(cloud.points.size());
  return cloud;
}

SampleCloud dilate_cloud(const CarnotGroup& g, const SampleCloud& unit_cloud, double r,
                         const SpaceTimePoint& center, const DomainPredicate& domain) {
  SampleCloud out;
  out.radius = r;
  out.draws = unit_cloud.draws;
  out.seed = unit_cloud.seed;
  out.weight_per_point = unit_cloud.weight_per_point * std::pow(r, g.hom_dim() + 2);
  out.points.reserve(unit_cloud.points.size());
  for (const auto& p : unit_cloud.points) {
    GroupPoint scaled = g.dilate(r, p.x);
    SpaceTimePoint pt(g.multiply(scaled, center.x), center.t + r * r * p.t);
    if (domain && !domain(pt)) continue;
    out.points.push_back(std::move(pt));
  }
  out.total_weight = out.weight_per_point * static_cast<double>(out.points.size());
  return out;
}

double cylinder_intersection_fraction(const CarnotGroup& g, const Cylinder& cyl,
                                      const DomainPredicate& domain, std::uint64_t draws,
                                      std::uint64_t seed) {
  SampleCloud inside = sample_cylinder(g, cyl, draws, seed, nullptr);
  if (inside.points.empty()) return 0.0;
  std::uint64_t hits = 0;
  for (const auto& p : inside.points)
    if (domain(p)) ++hits;
  return static_cast<double>(hits) / static_cast<double>(inside.points.size());
}

}  // namespace carnot
