#pragma once

#include <memory>
#include <string>
#include <vector>

#include "carnot/point.hpp"
#include "carnot/polynomial.hpp"
#include "carnot/stratification.hpp"

namespace carnot {

struct BuildOptions {
  // When false, a first layer that fails to generate the higher layers is
  // tolerated and only recorded (used by the Hormander diagnostics).
  bool require_generating = true;
};

struct GenerationReport {
  // spanned_dim[j] = dimension of span of [V1, V^j] inside V^{j+1}.
  std::vector<int> spanned_dim;
  std::vector<std::string> missing;
  bool generated = true;
};

// Immutable Carnot group: exact multiplication tables derived from the
// structure constants by the BCH series (terminating at the step), the
// full bracket table, dilations and coordinate bookkeeping.
class CarnotGroup {
 public:
  static CarnotGroup build(const StratificationSpec& spec, const BuildOptions& opt = {});

  const StratificationSpec& spec() const { return spec_; }
  int dim() const { return n_; }
  int hom_dim() const { return q_; }
  int step() const { return spec_.step; }
  int horizontal_dim() const { return spec_.layer_dims[0]; }
  int layer_dim(int k) const { return spec_.layer_dims[k - 1]; }
  int coord_index(int i, int k) const { return layer_offsets_[k - 1] + (i - 1); }
  int weight(int m) const { return weights_[m]; }
  const std::vector<int>& weights() const { return weights_; }

  // Output-coordinate polynomials of the product, in 2N variables
  // (vars 0..N-1 = first factor, N..2N-1 = second factor).
  const std::vector<RatPoly>& law() const { return law_; }

  // Full bracket of basis vectors as a dense coefficient vector.
  const std::vector<Rational>& bracket(int u, int v) const { return bracket_table_[u][v]; }

  const GenerationReport& generation() const { return generation_; }

  GroupPoint multiply(const GroupPoint& p, const GroupPoint& q) const;
  std::vector<Rational> multiply_exact(const std::vector<Rational>& p, const std::vector<Rational>& q) const;
  GroupPoint inverse(const GroupPoint& p) const;
  GroupPoint identity() const { return GroupPoint(n_); }

  GroupPoint dilate(double s, const GroupPoint& p) const;
  SpaceTimePoint parabolic_dilate(double s, const SpaceTimePoint& pt) const;

 private:
  CarnotGroup() = default;
  void check_point(const GroupPoint& p) const;

  StratificationSpec spec_;
  int n_ = 0;
  int q_ = 0;
  std::vector<int> layer_offsets_;
  std::vector<int> weights_;
  std::vector<std::vector<std::vector<Rational>>> bracket_table_;
  std::vector<RatPoly> law_;
  std::vector<Polynomial<double>> law_d_;
  GenerationReport generation_;
};

}  // namespace carnot
