#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "carnot/group.hpp"
#include "carnot/point.hpp"
#include "carnot/vector_field.hpp"

namespace carnot {

using SpaceTimeFn = std::function<double(const SpaceTimePoint&)>;

// Tensor-product spatial box times a uniformly recorded time interval.
struct GridSpec {
  std::vector<double> lo, hi;  // per spatial coordinate
  std::vector<int> nodes;      // per spatial coordinate, >= 5
  double t0 = 0.0, t1 = 1.0;
  int time_nodes = 2;  // recorded levels, uniformly spaced

  void validate(int expected_dim) const;
  int spatial_size() const;
  double spacing(int axis) const { return (hi[axis] - lo[axis]) / (nodes[axis] - 1); }
  double record_dt() const { return (t1 - t0) / (time_nodes - 1); }

  // Box covering the parabolic cylinder of the given radius about the
  // spacetime origin, with weighted extents scaled by `pad`.
  static GridSpec covering_cylinder(const CarnotGroup& g, double radius, int nodes_per_axis,
                                    int time_nodes, double pad = 1.05, double time_pad = 1.05);
};

// Dense scalar field over the grid nodes and recorded time levels.
class GridFunction {
 public:
  GridFunction() = default;
  GridFunction(const GridSpec& spec, int spatial_dim);

  const GridSpec& spec() const { return spec_; }
  int spatial_dim() const { return dim_; }
  int spatial_size() const { return spatial_size_; }
  int levels() const { return spec_.time_nodes; }

  double& at(int level, int flat) { return data_[std::size_t(level) * spatial_size_ + flat]; }
  double at(int level, int flat) const { return data_[std::size_t(level) * spatial_size_ + flat]; }
  std::vector<double>& raw() { return data_; }
  const std::vector<double>& raw() const { return data_; }

  int flat_index(const std::vector<int>& idx) const;
  void unflatten(int flat, std::vector<int>& idx) const;
  std::vector<double> node_coords(int flat) const;
  double level_time(int level) const { return spec_.t0 + level * spec_.record_dt(); }
  int stride(int axis) const { return strides_[axis]; }

  // Distance to the nearest spatial boundary in cells.
  int boundary_margin(int flat) const;

  // Multilinear interpolation in space and linear in recorded time.
  double interpolate(const SpaceTimePoint& p) const;

  void fill(int level, const SpaceTimeFn& f);

  // Flat binary array with a structured-text header.
  void save(const std::string& path, const std::string& group_id) const;
  static GridFunction load(const std::string& path, std::string* group_id = nullptr);

  // Two-column CSV (coordinate along one axis, value) through a node line.
  std::string csv_slice(int level, int axis, const std::vector<int>& base_idx) const;

 private:
  GridSpec spec_;
  int dim_ = 0;
  int spatial_size_ = 0;
  std::vector<int> strides_;
  std::vector<double> data_;
};

// Horizontal derivative of one recorded level: centered 2nd order inside,
// one-sided 2nd order at the spatial boundary.
std::vector<double> apply_field_fd(const CarnotGroup& g, const PolyVectorField& field,
                                   const GridFunction& u, int level);

// X^I D_t^l of a grid function, stencils composed innermost-first. The time
// derivative differences recorded levels (centered inside, one-sided at the
// ends). Throws when the word needs more levels than recorded.
GridFunction apply_derivative_fd(const CarnotGroup& g, const std::vector<PolyVectorField>& horizontal,
                                 const GridFunction& u, const DerivativeMultiIndex& d);

// L^p norm over the nodes inside a parabolic cylinder (Riemann sum with the
// cell volume). Throws when the grid does not cover the cylinder with a
// 2-cell stencil margin.
double lp_norm_on_cylinder(const CarnotGroup& g, const GridFunction& u, const Cylinder& cyl, double p,
                           int required_margin = 2);

// Sobolev norm S_p^{2,1}: sum over horizontal words up to order 2 plus the
// time derivative term.
double sobolev_norm(const CarnotGroup& g, const std::vector<PolyVectorField>& horizontal,
                    const GridFunction& u, double p, const Cylinder& cyl);

}  // namespace carnot
