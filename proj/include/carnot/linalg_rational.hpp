#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "carnot/rational.hpp"

namespace carnot {

// Dense exact-rational matrix, row-major. Sized for the small graded systems
// that show up here (basis dimensions in the tens).
class RatMatrix {
 public:
  RatMatrix() : rows_(0), cols_(0) {}
  RatMatrix(int rows, int cols) : rows_(rows), cols_(cols), data_(std::size_t(rows) * cols, Rational(0)) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  Rational& operator()(int r, int c) { return data_[std::size_t(r) * cols_ + c]; }
  const Rational& operator()(int r, int c) const { return data_[std::size_t(r) * cols_ + c]; }

  RatMatrix transposed() const {
    RatMatrix t(cols_, rows_);
    for (int r = 0; r < rows_; ++r)
      for (int c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
  }

  RatMatrix operator*(const RatMatrix& o) const {
    if (cols_ != o.rows_) throw std::invalid_argument("matrix product shape mismatch");
    RatMatrix p(rows_, o.cols_);
    for (int r = 0; r < rows_; ++r)
      for (int k = 0; k < cols_; ++k) {
        const Rational& a = (*this)(r, k);
        if (a.is_zero()) continue;
        for (int c = 0; c < o.cols_; ++c) p(r, c) += a * o(k, c);
      }
    return p;
  }

  std::vector<Rational> apply(const std::vector<Rational>& v) const {
    if (static_cast<int>(v.size()) != cols_) throw std::invalid_argument("matrix apply shape mismatch");
    std::vector<Rational> out(rows_, Rational(0));
    for (int r = 0; r < rows_; ++r)
      for (int c = 0; c < cols_; ++c)
        if (!(*this)(r, c).is_zero()) out[r] += (*this)(r, c) * v[c];
    return out;
  }

 private:
  int rows_, cols_;
  std::vector<Rational> data_;
};

struct RrefResult {
  RatMatrix mat;
  std::vector<int> pivot_cols;
  int rank = 0;
};

inline RrefResult rref(RatMatrix a) {
  RrefResult res;
  int lead = 0;
  for (int r = 0; r < a.rows() && lead < a.cols(); ++r) {
    int pivot = -1;
    while (lead < a.cols()) {
      for (int i = r; i < a.rows(); ++i)
        if (!a(i, lead).is_zero()) { pivot = i; break; }
      if (pivot >= 0) break;
      ++lead;
    }
    if (pivot < 0) break;
    if (pivot != r)
      for (int c = 0; c < a.cols(); ++c) std::swap(a(pivot, c), a(r, c));
    Rational inv = Rational(1) / a(r, lead);
    for (int c = 0; c < a.cols(); ++c) a(r, c) *= inv;
    for (int i = 0; i < a.rows(); ++i) {
      if (i == r || a(i, lead).is_zero()) continue;
      Rational f = a(i, lead);
      for (int c = 0; c < a.cols(); ++c) a(i, c) -= f * a(r, c);
    }
    res.pivot_cols.push_back(lead);
    ++lead;
  }
  res.rank = static_cast<int>(res.pivot_cols.size());
  res.mat = std::move(a);
  return res;
}

inline int rank(const RatMatrix& a) { return rref(a).rank; }

// Solves A x = b exactly; returns nullopt when inconsistent. When the system
// is underdetermined, free variables are set to zero.
inline std::optional<std::vector<Rational>> solve_any(const RatMatrix& a, const std::vector<Rational>& b) {
  if (static_cast<int>(b.size()) != a.rows()) throw std::invalid_argument("solve shape mismatch");
  RatMatrix aug(a.rows(), a.cols() + 1);
  for (int r = 0; r < a.rows(); ++r) {
    for (int c = 0; c < a.cols(); ++c) aug(r, c) = a(r, c);
    aug(r, a.cols()) = b[r];
  }
  RrefResult rr = rref(std::move(aug));
  for (int pc : rr.pivot_cols)
    if (pc == a.cols()) return std::nullopt;  // row [0 ... 0 | 1]
  std::vector<Rational> x(a.cols(), Rational(0));
  for (std::size_t i = 0; i < rr.pivot_cols.size(); ++i) x[rr.pivot_cols[i]] = rr.mat(static_cast<int>(i), a.cols());
  return x;
}

// Solves a square nonsingular system exactly; throws if singular.
inline std::vector<Rational> solve_square(const RatMatrix& a, const std::vector<Rational>& b) {
  if (a.rows() != a.cols()) throw std::invalid_argument("square solve on non-square matrix");
  auto x = solve_any(a, b);
  if (!x) throw std::runtime_error("singular square system");
  if (rank(a) != a.rows()) throw std::runtime_error("singular square system");
  return *x;
}

// Columns form a basis of the nullspace of A.
inline RatMatrix nullspace(const RatMatrix& a) {
  RrefResult rr = rref(a);
  std::vector<bool> is_pivot(a.cols(), false);
  for (int pc : rr.pivot_cols) is_pivot[pc] = true;
  std::vector<int> free_cols;
  for (int c = 0; c < a.cols(); ++c)
    if (!is_pivot[c]) free_cols.push_back(c);
  RatMatrix ns(a.cols(), static_cast<int>(free_cols.size()));
  for (std::size_t j = 0; j < free_cols.size(); ++j) {
    int fc = free_cols[j];
    ns(fc, static_cast<int>(j)) = 1;
    for (std::size_t i = 0; i < rr.pivot_cols.size(); ++i)
      ns(rr.pivot_cols[i], static_cast<int>(j)) = -rr.mat(static_cast<int>(i), fc);
  }
  return ns;
}

// Minimum-coefficient-norm solution of A x = b (Euclidean norm on x), exact.
// Returns nullopt when the system is inconsistent.
inline std::optional<std::vector<Rational>> solve_min_norm(const RatMatrix& a, const std::vector<Rational>& b) {
  auto x0 = solve_any(a, b);
  if (!x0) return std::nullopt;
  RatMatrix ns = nullspace(a);
  if (ns.cols() == 0) return x0;
  // Project x0 off the nullspace: x = x0 - N (N^T N)^{-1} N^T x0.
  RatMatrix nt = ns.transposed();
  RatMatrix gram = nt * ns;
  std::vector<Rational> rhs = nt.apply(*x0);
  std::vector<Rational> y = solve_square(gram, rhs);
  std::vector<Rational> corr = ns.apply(y);
  for (std::size_t i = 0; i < x0->size(); ++i) (*x0)[i] -= corr[i];
  return x0;
}

}  // namespace carnot
