#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "carnot/rational.hpp"

namespace carnot {

struct SpecError : std::runtime_error {
  explicit SpecError(const std::string& what) : std::runtime_error(what) {}
};

// One sparse structure constant: [X_{a,1}, X_{b,b_layer}] has component
// coeff on X_{out,b_layer+1}. Indices are 1-based within their layer.
struct BracketEntry {
  int a = 1;
  int b = 1;
  int b_layer = 1;
  int out = 1;
  Rational coeff;
};

struct StratificationSpec {
  int step = 1;
  std::vector<int> layer_dims;
  std::vector<BracketEntry> brackets;

  int total_dim() const {
    int n = 0;
    for (int m : layer_dims) n += m;
    return n;
  }
  int hom_dim() const {
    int q = 0;
    for (std::size_t k = 0; k < layer_dims.size(); ++k) q += static_cast<int>(k + 1) * layer_dims[k];
    return q;
  }

  // Basic shape checks; the deeper algebraic checks run in CarnotGroup::build.
  void validate_shape() const;

  std::string serialize() const;
  static StratificationSpec parse(std::istream& in);
  static StratificationSpec parse_string(const std::string& text);
};

// Built-in groups. The paper's Heisenberg presentation mixes two
// conventions: the printed group law corresponds to [X_i, X_{n+i}] = -4 T
// while the printed vector fields correspond to [X_i, X_{n+i}] = T. Both
// are available; fields are always derived from the configured law.
StratificationSpec heisenberg_law_spec(int n);
StratificationSpec heisenberg_fields_spec(int n);
StratificationSpec engel_spec();
StratificationSpec abelian_spec(int n);
StratificationSpec free_nilpotent_2_3_spec();
// Layer-respecting random change of basis of the free nilpotent (2,3)
// algebra; valid for any seed.
StratificationSpec random_step3_spec(unsigned long long seed);
// First layer fails to generate layer 2 (diagnostic use only).
StratificationSpec degenerate_spec();

}  // namespace carnot
