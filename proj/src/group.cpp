#include "carnot/group.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <sstream>

#include "carnot/linalg_rational.hpp"

namespace carnot {

namespace {

using Vec = std::vector<Rational>;

Vec zero_vec(int n) { return Vec(n, Rational(0)); }

bool vec_is_zero(const Vec& v) {
  for (const auto& q : v)
    if (!q.is_zero()) return false;
  return true;
}

std::string describe_basis(int i, int k) {
  std::ostringstream s;
  s << "X_(" << i << "," << k << ")";
  return s.str();
}

// Derives the full basis bracket table from the [V1, V^j] structure
// constants. Higher-layer brackets follow from Jacobi once each
// higher-layer basis vector is written as a combination of
// [horizontal, lower-layer] brackets.
class BracketBuilder {
 public:
  BracketBuilder(const StratificationSpec& spec, const std::vector<int>& offsets,
                 const std::vector<int>& weights, int n)
      : spec_(spec), offsets_(offsets), weights_(weights), n_(n) {
    partial_.assign(n_, std::vector<Vec>(n_, zero_vec(n_)));
    // Fill [layer1, any layer] from the spec, enforcing antisymmetry for
    // layer-1 pairs.
    std::map<std::pair<int, int>, Vec> given;
    for (const auto& e : spec_.brackets) {
      int u = offsets_[0] + (e.a - 1);
      int v = offsets_[e.b_layer - 1] + (e.b - 1);
      int w = offsets_[e.b_layer] + (e.out - 1);
      auto key = std::make_pair(u, v);
      auto it = given.emplace(key, zero_vec(n_)).first;
      it->second[w] += e.coeff;
    }
    for (const auto& [key, val] : given) {
      auto [u, v] = key;
      partial_[u][v] = val;
      if (weights_[v] == 1) {
        auto rit = given.find({v, u});
        if (rit != given.end()) {
          Vec sum = val;
          for (int i = 0; i < n_; ++i) sum[i] += rit->second[i];
          if (!vec_is_zero(sum))
            throw SpecError("antisymmetry violated for bracket [" + name(u) + "," + name(v) + "]");
        } else {
          for (int i = 0; i < n_; ++i) partial_[v][u][i] = -val[i];
        }
      }
    }
  }

  GenerationReport derive_decompositions() {
    GenerationReport rep;
    decomp_.assign(n_, {});
    for (int layer = 2; layer <= spec_.step; ++layer) {
      int mk = spec_.layer_dims[layer - 1];
      int mprev = spec_.layer_dims[layer - 2];
      int m1 = spec_.layer_dims[0];
      // Columns: pairs (a in layer 1, e in layer-1 below); rows: layer coords.
      RatMatrix cols(mk, m1 * mprev);
      for (int a = 0; a < m1; ++a)
        for (int e = 0; e < mprev; ++e) {
          int u = offsets_[0] + a;
          int v = offsets_[layer - 2] + e;
          const Vec& b = partial_[u][v];
          for (int i = 0; i < mk; ++i) cols(i, a * mprev + e) = b[offsets_[layer - 1] + i];
        }
      int rk = rank(cols);
      rep.spanned_dim.push_back(rk);
      for (int c = 0; c < mk; ++c) {
        Vec rhs(mk, Rational(0));
        rhs[c] = 1;
        auto sol = solve_any(cols, rhs);
        int idx = offsets_[layer - 1] + c;
        if (!sol) {
          rep.generated = false;
          rep.missing.push_back(describe_basis(c + 1, layer));
          continue;
        }
        for (int a = 0; a < m1; ++a)
          for (int e = 0; e < mprev; ++e) {
            const Rational& d = (*sol)[a * mprev + e];
            if (!d.is_zero())
              decomp_[idx].push_back({offsets_[0] + a, offsets_[layer - 2] + e, d});
          }
      }
    }
    return rep;
  }

  Vec bracket(int u, int v) {
    int lu = weights_[u], lv = weights_[v];
    if (lu + lv > spec_.step) return zero_vec(n_);
    if (lu == 1) return partial_[u][v];
    if (lv == 1) return negate(bracket(v, u));
    auto key = std::make_pair(u, v);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    // [u,v] with u = sum d [A, E]:  [[A,E],v] = [A,[E,v]] - [E,[A,v]].
    Vec out = zero_vec(n_);
    for (const auto& term : decomp_[u]) {
      Vec ev = bracket(term.e, v);
      Vec a_ev = bracket_with_vec(term.a, ev);
      Vec av = partial_[term.a][v];
      Vec e_av = bracket_vec_left(term.e, av);
      for (int i = 0; i < n_; ++i) out[i] += term.d * (a_ev[i] - e_av[i]);
    }
    memo_.emplace(key, out);
    return out;
  }

 private:
  struct DecompTerm {
    int a;  // layer-1 basis index (global)
    int e;  // lower-layer basis index (global)
    Rational d;
  };

  std::string name(int u) const {
    int k = weights_[u];
    return describe_basis(u - offsets_[k - 1] + 1, k);
  }

  Vec negate(Vec v) {
    for (auto& q : v) q = -q;
    return v;
  }
  Vec bracket_with_vec(int a, const Vec& v) {
    Vec out = zero_vec(n_);
    for (int m = 0; m < n_; ++m) {
      if (v[m].is_zero()) continue;
      const Vec& b = partial_[a][m];
      for (int i = 0; i < n_; ++i) out[i] += v[m] * b[i];
    }
    return out;
  }
  Vec bracket_vec_left(int e, const Vec& v) {
    Vec out = zero_vec(n_);
    for (int m = 0; m < n_; ++m) {
      if (v[m].is_zero()) continue;
      Vec b = bracket(e, m);
      for (int i = 0; i < n_; ++i) out[i] += v[m] * b[i];
    }
    return out;
  }

  const StratificationSpec& spec_;
  const std::vector<int>& offsets_;
  const std::vector<int>& weights_;
  int n_;
  std::vector<std::vector<Vec>> partial_;
  std::vector<std::vector<DecompTerm>> decomp_;
  std::map<std::pair<int, int>, Vec> memo_;
};

// Algebra element whose coefficients are polynomials in the 2N product
// variables; used to expand the BCH series symbolically.
using AlgPoly = std::vector<RatPoly>;

AlgPoly alg_bracket(const AlgPoly& a, const AlgPoly& b,
                    const std::vector<std::vector<Vec>>& table, int n, int nvars) {
  AlgPoly out(n, RatPoly(nvars));
  for (int u = 0; u < n; ++u) {
    if (a[u].empty()) continue;
    for (int v = 0; v < n; ++v) {
      if (b[v].empty()) continue;
      const Vec& t = table[u][v];
      RatPoly prod = a[u] * b[v];
      for (int w = 0; w < n; ++w)
        if (!t[w].is_zero()) out[w] += prod * t[w];
    }
  }
  return out;
}

// Enumerates the composition blocks of the Dynkin form of the BCH series up
// to total word length `max_len` and accumulates the bracket words.
void dynkin_accumulate(AlgPoly& z, const AlgPoly& X, const AlgPoly& Y,
                       const std::vector<std::vector<Vec>>& table, int n, int nvars, int max_len) {
  struct Block {
    int p, q;
  };
  std::vector<Block> blocks;
  std::function<void(int, int)> recurse = [&](int used, int k) {
    if (!blocks.empty()) {
      // Evaluate the current composition.
      std::vector<const AlgPoly*> word;
      for (const auto& b : blocks) {
        for (int i = 0; i < b.p; ++i) word.push_back(&X);
        for (int i = 0; i < b.q; ++i) word.push_back(&Y);
      }
      int m = static_cast<int>(word.size());
      bool zero = m >= 2 && word[m - 1] == word[m - 2];
      if (!zero) {
        AlgPoly acc = *word[m - 1];
        for (int j = m - 2; j >= 0; --j) acc = alg_bracket(*word[j], acc, table, n, nvars);
        BigInt denom = BigInt(k) * BigInt(m);
        for (const auto& b : blocks) denom *= factorial(b.p) * factorial(b.q);
        Rational coeff(BigInt((k % 2 == 1) ? 1 : -1), denom);
        for (int w = 0; w < n; ++w)
          if (!acc[w].empty()) z[w] += acc[w] * coeff;
      }
    }
    if (used == max_len) return;
    for (int s = 1; s <= max_len - used; ++s)
      for (int p = 0; p <= s; ++p) {
        blocks.push_back({p, s - p});
        recurse(used + s, k + 1);
        blocks.pop_back();
      }
  };
  recurse(0, 0);
}

}  // namespace

CarnotGroup CarnotGroup::build(const StratificationSpec& spec, const BuildOptions& opt) {
  spec.validate_shape();
  CarnotGroup g;
  g.spec_ = spec;
  g.n_ = spec.total_dim();
  g.q_ = spec.hom_dim();
  g.layer_offsets_.resize(spec.step);
  int off = 0;
  for (int k = 0; k < spec.step; ++k) {
    g.layer_offsets_[k] = off;
    off += spec.layer_dims[k];
  }
  g.weights_.resize(g.n_);
  for (int k = 1; k <= spec.step; ++k)
    for (int i = 0; i < spec.layer_dims[k - 1]; ++i) g.weights_[g.layer_offsets_[k - 1] + i] = k;

  BracketBuilder builder(spec, g.layer_offsets_, g.weights_, g.n_);
  g.generation_ = builder.derive_decompositions();
  if (opt.require_generating && !g.generation_.generated) {
    std::string msg = "first layer does not generate:";
    for (const auto& m : g.generation_.missing) msg += " " + m;
    throw SpecError(msg);
  }

  g.bracket_table_.assign(g.n_, std::vector<Vec>(g.n_, zero_vec(g.n_)));
  for (int u = 0; u < g.n_; ++u)
    for (int v = 0; v < g.n_; ++v) g.bracket_table_[u][v] = builder.bracket(u, v);

  // Antisymmetry of the derived table (layer-1 pairs were checked on input).
  for (int u = 0; u < g.n_; ++u)
    for (int v = 0; v < g.n_; ++v) {
      for (int w = 0; w < g.n_; ++w) {
        if (g.bracket_table_[u][v][w] + g.bracket_table_[v][u][w] != 0) {
          std::ostringstream msg;
          msg << "antisymmetry failure in derived bracket table at pair (" << u << "," << v << ")";
          throw SpecError(msg.str());
        }
        if (!g.bracket_table_[u][v][w].is_zero() && g.weights_[w] != g.weights_[u] + g.weights_[v]) {
          std::ostringstream msg;
          msg << "grading violation in derived bracket table at pair (" << u << "," << v << ")";
          throw SpecError(msg.str());
        }
      }
    }

  // Jacobi identity on all basis triples.
  auto bracket_lin = [&](int u, const Vec& v) {
    Vec out = zero_vec(g.n_);
    for (int m = 0; m < g.n_; ++m) {
      if (v[m].is_zero()) continue;
      for (int w = 0; w < g.n_; ++w) out[w] += v[m] * g.bracket_table_[u][m][w];
    }
    return out;
  };
  for (int a = 0; a < g.n_; ++a)
    for (int b = a + 1; b < g.n_; ++b)
      for (int c = b + 1; c < g.n_; ++c) {
        if (g.weights_[a] + g.weights_[b] + g.weights_[c] > spec.step) continue;
        Vec j1 = bracket_lin(a, g.bracket_table_[b][c]);
        Vec j2 = bracket_lin(b, g.bracket_table_[c][a]);
        Vec j3 = bracket_lin(c, g.bracket_table_[a][b]);
        for (int w = 0; w < g.n_; ++w) j1[w] += j2[w] + j3[w];
        if (!vec_is_zero(j1)) {
          std::ostringstream msg;
          msg << "Jacobi identity fails on basis triple (" << a << "," << b << "," << c << ")";
          throw SpecError(msg.str());
        }
      }

  // BCH product in exponential coordinates, exact.
  int nvars = 2 * g.n_;
  AlgPoly X(g.n_, RatPoly(nvars)), Y(g.n_, RatPoly(nvars));
  for (int m = 0; m < g.n_; ++m) {
    X[m] = RatPoly::variable(nvars, m);
    Y[m] = RatPoly::variable(nvars, g.n_ + m);
  }
  AlgPoly z(g.n_, RatPoly(nvars));
  dynkin_accumulate(z, X, Y, g.bracket_table_, g.n_, nvars, spec.step);
  g.law_ = std::move(z);
  g.law_d_.reserve(g.n_);
  for (const auto& p : g.law_) g.law_d_.push_back(to_double_poly(p));
  return g;
}

void CarnotGroup::check_point(const GroupPoint& p) const {
  if (p.dim() != n_) throw std::invalid_argument("point dimension does not match group");
}

GroupPoint CarnotGroup::multiply(const GroupPoint& p, const GroupPoint& q) const {
  check_point(p);
  check_point(q);
  std::vector<double> xy(2 * n_);
  for (int i = 0; i < n_; ++i) {
    xy[i] = p[i];
    xy[n_ + i] = q[i];
  }
  GroupPoint out(n_);
  for (int m = 0; m < n_; ++m) out[m] = law_d_[m].eval(xy);
  return out;
}

std::vector<Rational> CarnotGroup::multiply_exact(const std::vector<Rational>& p,
                                                  const std::vector<Rational>& q) const {
  if (static_cast<int>(p.size()) != n_ || static_cast<int>(q.size()) != n_)
    throw std::invalid_argument("point dimension does not match group");
  std::vector<Rational> xy(2 * n_);
  for (int i = 0; i < n_; ++i) {
    xy[i] = p[i];
    xy[n_ + i] = q[i];
  }
  std::vector<Rational> out(n_);
  for (int m = 0; m < n_; ++m) out[m] = law_[m].eval_exact(xy);
  return out;
}

GroupPoint CarnotGroup::inverse(const GroupPoint& p) const {
  check_point(p);
  GroupPoint out(n_);
  for (int i = 0; i < n_; ++i) out[i] = -p[i];
  return out;
}

GroupPoint CarnotGroup::dilate(double s, const GroupPoint& p) const {
  if (!(s > 0)) throw std::invalid_argument("dilation factor must be positive");
  check_point(p);
  GroupPoint out(n_);
  for (int i = 0; i < n_; ++i) out[i] = std::pow(s, weights_[i]) * p[i];
  return out;
}

SpaceTimePoint CarnotGroup::parabolic_dilate(double s, const SpaceTimePoint& pt) const {
  return SpaceTimePoint(dilate(s, pt.x), s * s * pt.t);
}

}  // namespace carnot
