#include "carnot/stratification.hpp"

#include <random>
#include <sstream>

#include "carnot/linalg_rational.hpp"

namespace carnot {

void StratificationSpec::validate_shape() const {
  if (step < 1) throw SpecError("step must be >= 1");
  if (static_cast<int>(layer_dims.size()) != step) throw SpecError("layer_dims size must equal step");
  for (int m : layer_dims)
    if (m < 1) throw SpecError("layer dimensions must be positive");
  for (const auto& e : brackets) {
    std::ostringstream tag;
    tag << "bracket [(" << e.a << ",1),(" << e.b << "," << e.b_layer << ")] -> (" << e.out << ","
        << e.b_layer + 1 << ")";
    if (e.b_layer < 1 || e.b_layer >= step)
      throw SpecError("grading violation: " + tag.str() + " leaves the stratification");
    if (e.a < 1 || e.a > layer_dims[0]) throw SpecError("index out of range in " + tag.str());
    if (e.b < 1 || e.b > layer_dims[e.b_layer - 1]) throw SpecError("index out of range in " + tag.str());
    if (e.out < 1 || e.out > layer_dims[e.b_layer]) throw SpecError("index out of range in " + tag.str());
  }
}

std::string StratificationSpec::serialize() const {
  std::ostringstream out;
  out << "carnot-spec v1\n";
  out << "step " << step << "\n";
  out << "layers";
  for (int m : layer_dims) out << " " << m;
  out << "\n";
  for (const auto& e : brackets)
    out << "bracket " << e.a << " " << e.b << " " << e.b_layer << " " << e.out << " "
        << format_rational(e.coeff) << "\n";
  return out.str();
}

StratificationSpec StratificationSpec::parse(std::istream& in) {
  StratificationSpec spec;
  std::string line;
  bool saw_header = false, saw_step = false, saw_layers = false;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key) || key.front() == '#') continue;
    if (key == "carnot-spec") {
      saw_header = true;
    } else if (key == "step") {
      if (!(ls >> spec.step)) throw SpecError("bad step line");
      saw_step = true;
    } else if (key == "layers") {
      int m;
      while (ls >> m) spec.layer_dims.push_back(m);
      saw_layers = true;
    } else if (key == "bracket") {
      BracketEntry e;
      std::string coeff;
      if (!(ls >> e.a >> e.b >> e.b_layer >> e.out >> coeff)) throw SpecError("bad bracket line: " + line);
      e.coeff = parse_rational(coeff);
      spec.brackets.push_back(e);
    } else {
      throw SpecError("unknown directive '" + key + "' in group spec");
    }
  }
  if (!saw_header || !saw_step || !saw_layers) throw SpecError("incomplete group spec");
  spec.validate_shape();
  return spec;
}

StratificationSpec StratificationSpec::parse_string(const std::string& text) {
  std::istringstream in(text);
  return parse(in);
}

StratificationSpec heisenberg_law_spec(int n) {
  StratificationSpec s;
  s.step = 2;
  s.layer_dims = {2 * n, 1};
  for (int i = 1; i <= n; ++i) s.brackets.push_back({i, n + i, 1, 1, Rational(-4)});
  return s;
}

StratificationSpec heisenberg_fields_spec(int n) {
  StratificationSpec s;
  s.step = 2;
  s.layer_dims = {2 * n, 1};
  for (int i = 1; i <= n; ++i) s.brackets.push_back({i, n + i, 1, 1, Rational(1)});
  return s;
}

StratificationSpec engel_spec() {
  StratificationSpec s;
  s.step = 3;
  s.layer_dims = {2, 1, 1};
  s.brackets.push_back({1, 2, 1, 1, Rational(1)});  // [X1,X2] = X3
  s.brackets.push_back({1, 1, 2, 1, Rational(1)});  // [X1,X3] = X4
  return s;
}

StratificationSpec abelian_spec(int n) {
  StratificationSpec s;
  s.step = 1;
  s.layer_dims = {n};
  return s;
}

StratificationSpec free_nilpotent_2_3_spec() {
  StratificationSpec s;
  s.step = 3;
  s.layer_dims = {2, 1, 2};
  s.brackets.push_back({1, 2, 1, 1, Rational(1)});  // [X1,X2] = X3
  s.brackets.push_back({1, 1, 2, 1, Rational(1)});  // [X1,X3] = X4
  s.brackets.push_back({2, 1, 2, 2, Rational(1)});  // [X2,X3] = X5
  return s;
}

StratificationSpec degenerate_spec() {
  StratificationSpec s;
  s.step = 2;
  s.layer_dims = {1, 1};
  // no brackets: [V1,V1] = 0 cannot reach V2
  return s;
}

namespace {

RatMatrix random_unimodular(int n, std::mt19937_64& rng) {
  // Product of random elementary matrices: invertible with small entries.
  RatMatrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1;
  std::uniform_int_distribution<int> pick(0, n - 1);
  std::uniform_int_distribution<int> val(-2, 2);
  for (int ops = 0; ops < 4 * n; ++ops) {
    int r = pick(rng), c = pick(rng);
    int v = val(rng);
    if (r == c || v == 0) continue;
    for (int j = 0; j < n; ++j) m(r, j) += Rational(v) * m(c, j);
  }
  return m;
}

}  // namespace

StratificationSpec random_step3_spec(unsigned long long seed) {
  // Change of basis of the free nilpotent (2,3) algebra: E'_{.,k} = S_k E_{.,k}.
  StratificationSpec base = free_nilpotent_2_3_spec();
  std::mt19937_64 rng(seed);
  RatMatrix s1 = random_unimodular(2, rng);
  RatMatrix s2 = random_unimodular(1, rng);
  RatMatrix s3 = random_unimodular(2, rng);

  auto bracket_base = [&](int layer_b, int a, int b) {
    // [E_{a,1}, E_{b,layer_b}] of the base algebra in the layer_b+1 basis.
    std::vector<Rational> out(base.layer_dims[layer_b], Rational(0));
    for (const auto& e : base.brackets)
      if (e.b_layer == layer_b && e.a == a && e.b == b) out[e.out - 1] += e.coeff;
    return out;
  };

  // inverse images: solve S_k^T? We need coordinates of a vector v (in base
  // basis) with respect to the primed basis: coords' = S_k^{-1} v when
  // E'_i = sum_j S_k(i,j) E_j means v = sum coords'_i E'_i = S_k^T coords'.
  auto in_primed = [&](const RatMatrix& sk, const std::vector<Rational>& v) {
    RatMatrix st = sk.transposed();
    return solve_square(st, v);
  };

  StratificationSpec out;
  out.step = 3;
  out.layer_dims = base.layer_dims;
  // [E'_{a,1}, E'_{b,1}] = sum S1(a,u) S1(b,v) [E_u, E_v]
  for (int a = 1; a <= 2; ++a)
    for (int b = a + 1; b <= 2; ++b) {
      std::vector<Rational> v(1, Rational(0));
      for (int u = 1; u <= 2; ++u)
        for (int w = 1; w <= 2; ++w) {
          Rational f = s1(a - 1, u - 1) * s1(b - 1, w - 1);
          if (f.is_zero() || u == w) continue;
          auto bb = bracket_base(1, std::min(u, w), std::max(u, w));
          Rational sign = (u < w) ? Rational(1) : Rational(-1);
          for (std::size_t i = 0; i < v.size(); ++i) v[i] += f * sign * bb[i];
        }
      auto coords = in_primed(s2, v);
      for (std::size_t i = 0; i < coords.size(); ++i)
        if (!coords[i].is_zero())
          out.brackets.push_back({a, b, 1, static_cast<int>(i + 1), coords[i]});
    }
  // [E'_{a,1}, E'_{b,2}] = sum S1(a,u) S2(b,v) [E_u, E_{v,2}]
  for (int a = 1; a <= 2; ++a)
    for (int b = 1; b <= 1; ++b) {
      std::vector<Rational> v(2, Rational(0));
      for (int u = 1; u <= 2; ++u)
        for (int w = 1; w <= 1; ++w) {
          Rational f = s1(a - 1, u - 1) * s2(b - 1, w - 1);
          if (f.is_zero()) continue;
          auto bb = bracket_base(2, u, w);
          for (std::size_t i = 0; i < v.size(); ++i) v[i] += f * bb[i];
        }
      auto coords = in_primed(s3, v);
      for (std::size_t i = 0; i < coords.size(); ++i)
        if (!coords[i].is_zero())
          out.brackets.push_back({a, b, 2, static_cast<int>(i + 1), coords[i]});
    }
  return out;
}

}  // namespace carnot
