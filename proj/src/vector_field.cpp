#include "carnot/vector_field.hpp"

#include <sstream>

#include "carnot/linalg_rational.hpp"

namespace carnot {

std::string DerivativeMultiIndex::str() const {
  std::ostringstream s;
  for (int i : word) s << "X" << (i + 1);
  if (time_order > 0) s << "Dt^" << time_order;
  if (word.empty() && time_order == 0) s << "id";
  return s.str();
}

namespace {

// Restrict a polynomial in the 2N product variables to the first factor by
// setting the second factor to zero.
RatPoly restrict_to_first_factor(const RatPoly& p, int n) {
  RatPoly out(n);
  for (const auto& [m, c] : p.terms()) {
    bool pure = true;
    for (int i = n; i < 2 * n; ++i)
      if (m.sx[i] != 0) {
        pure = false;
        break;
      }
    if (!pure) continue;
    Monomial mm(n);
    for (int i = 0; i < n; ++i) mm.sx[i] = m.sx[i];
    mm.st = m.st;
    out.add_term(mm, c);
  }
  return out;
}

}  // namespace

std::vector<PolyVectorField> left_invariant_basis(const CarnotGroup& g) {
  int n = g.dim();
  std::vector<PolyVectorField> fields(n);
  for (int j = 0; j < n; ++j) {
    PolyVectorField f;
    f.layer = g.weight(j);
    f.coeffs.resize(n, RatPoly(n));
    for (int m = 0; m < n; ++m)
      f.coeffs[m] = restrict_to_first_factor(g.law()[m].derivative(n + j), n);
    fields[j] = std::move(f);
  }
  return fields;
}

std::vector<PolyVectorField> horizontal_fields(const CarnotGroup& g) {
  auto all = left_invariant_basis(g);
  all.resize(g.horizontal_dim());
  return all;
}

PolyVectorField commutator(const PolyVectorField& v, const PolyVectorField& w) {
  if (v.dim() != w.dim()) throw std::invalid_argument("commutator of fields over different groups");
  int n = v.dim();
  PolyVectorField out;
  out.layer = v.layer + w.layer;
  out.coeffs.resize(n, RatPoly(n));
  for (int m = 0; m < n; ++m) {
    RatPoly term(n);
    for (int k = 0; k < n; ++k) {
      if (!v.coeffs[k].empty()) term += v.coeffs[k] * w.coeffs[m].derivative(k);
      if (!w.coeffs[k].empty()) term -= w.coeffs[k] * v.coeffs[m].derivative(k);
    }
    out.coeffs[m] = term;
  }
  return out;
}

HormanderReport check_hormander(const CarnotGroup& g) {
  int n = g.dim();
  auto horizontal = horizontal_fields(g);
  HormanderReport rep;

  std::vector<Rational> zero(n, Rational(0));
  auto value_at_origin = [&](const PolyVectorField& f) {
    std::vector<Rational> v(n, Rational(0));
    for (int m = 0; m < n; ++m) v[m] = f.coeffs[m].eval_exact(zero);
    return v;
  };

  // Rows of the span matrix accumulate origin values of iterated
  // left-normed brackets [X_{i1},[X_{i2},...]].
  std::vector<std::vector<Rational>> rows;
  std::vector<PolyVectorField> frontier = horizontal;
  int depth = 0;
  int current_rank = 0;
  while (depth < 2 * g.step() + 2 && !frontier.empty()) {
    ++depth;
    for (const auto& f : frontier) rows.push_back(value_at_origin(f));
    RatMatrix m(static_cast<int>(rows.size()), n);
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (int c = 0; c < n; ++c) m(static_cast<int>(r), c) = rows[r][c];
    current_rank = rank(m);
    rep.span_dim_by_depth.push_back(current_rank);
    if (current_rank == n) {
      rep.spanning_depth = depth;
      rep.spans = true;
      break;
    }
    if (rep.span_dim_by_depth.size() >= 2 &&
        rep.span_dim_by_depth.back() == rep.span_dim_by_depth[rep.span_dim_by_depth.size() - 2])
      break;  // rank stalled; deeper brackets cannot help once stable
    std::vector<PolyVectorField> next;
    for (const auto& x : horizontal)
      for (const auto& f : frontier) next.push_back(commutator(x, f));
    frontier = std::move(next);
  }

  if (!rep.spans) {
    // Name the coordinate directions not reached by the span.
    RatMatrix m(static_cast<int>(rows.size()), n);
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (int c = 0; c < n; ++c) m(static_cast<int>(r), c) = rows[r][c];
    RrefResult rr = rref(m);
    std::vector<bool> covered(n, false);
    for (int pc : rr.pivot_cols) covered[pc] = true;
    for (int c = 0; c < n; ++c)
      if (!covered[c]) {
        std::ostringstream s;
        s << "coordinate " << c << " (layer " << g.weight(c) << ")";
        rep.missing_directions.push_back(s.str());
      }
  }
  return rep;
}

std::vector<DerivativeMultiIndex> derivative_words_of_order(int m1, int order) {
  std::vector<DerivativeMultiIndex> out;
  for (int l = 0; 2 * l <= order; ++l) {
    int len = order - 2 * l;
    std::vector<int> word(len, 0);
    while (true) {
      out.push_back({word, l});
      int pos = len - 1;
      while (pos >= 0 && word[pos] == m1 - 1) {
        word[pos] = 0;
        --pos;
      }
      if (pos < 0) break;
      ++word[pos];
    }
  }
  return out;
}

std::vector<DerivativeMultiIndex> derivative_words_up_to(int m1, int order) {
  std::vector<DerivativeMultiIndex> out;
  for (int k = 0; k <= order; ++k) {
    auto words = derivative_words_of_order(m1, k);
    out.insert(out.end(), words.begin(), words.end());
  }
  return out;
}

}  // namespace carnot
