#include "carnot/heat_poly.hpp"

#include <sstream>
#include <stdexcept>

namespace carnot {

RatMatrix identity_matrix(int n) {
  RatMatrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1;
  return m;
}

void check_spd(const RatMatrix& a0) {
  if (a0.rows() != a0.cols()) throw std::invalid_argument("coefficient matrix must be square");
  int n = a0.rows();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (a0(i, j) != a0(j, i)) throw std::invalid_argument("coefficient matrix must be symmetric");
  // Sylvester: all leading principal minors positive, computed exactly.
  for (int k = 1; k <= n; ++k) {
    RatMatrix sub(k, k);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) sub(i, j) = a0(i, j);
    // determinant via rational elimination
    Rational det(1);
    for (int c = 0; c < k; ++c) {
      int pivot = -1;
      for (int r = c; r < k; ++r)
        if (!sub(r, c).is_zero()) {
          pivot = r;
          break;
        }
      if (pivot < 0) {
        det = 0;
        break;
      }
      if (pivot != c) {
        for (int j = 0; j < k; ++j) std::swap(sub(pivot, j), sub(c, j));
        det = -det;
      }
      det *= sub(c, c);
      Rational inv = Rational(1) / sub(c, c);
      for (int r = c + 1; r < k; ++r) {
        Rational f = sub(r, c) * inv;
        if (f.is_zero()) continue;
        for (int j = c; j < k; ++j) sub(r, j) -= f * sub(c, j);
      }
    }
    if (det <= 0) throw std::invalid_argument("coefficient matrix is not positive definite");
  }
}

RatPoly heat_apply(const CarnotGroup& g, const std::vector<PolyVectorField>& horizontal,
                   const RatMatrix& a0, const RatPoly& p) {
  int m1 = g.horizontal_dim();
  if (a0.rows() != m1) throw std::invalid_argument("coefficient matrix size must match the first layer");
  RatPoly out = p.dt();
  for (int j = 0; j < m1; ++j) {
    RatPoly xj = horizontal[j].apply(p);
    if (xj.empty()) continue;
    for (int i = 0; i < m1; ++i) {
      if (a0(i, j).is_zero()) continue;
      out -= horizontal[i].apply(xj) * a0(i, j);
    }
  }
  return out;
}

HeatMatrix heat_matrix_homogeneous(const CarnotGroup& g, const std::vector<PolyVectorField>& horizontal,
                                   const RatMatrix& a0, int d) {
  if (d < 2) throw std::invalid_argument("heat matrix needs degree >= 2");
  HeatMatrix hm{PolySpaceBasis::homogeneous(g, d), PolySpaceBasis::homogeneous(g, d - 2),
                RatMatrix()};
  hm.m = RatMatrix(hm.range.dim(), hm.domain.dim());
  for (int j = 0; j < hm.domain.dim(); ++j) {
    RatPoly mono(g.dim());
    mono.add_term(hm.domain.monomial(j), Rational(1));
    RatPoly image = heat_apply(g, horizontal, a0, mono);
    for (const auto& [m, c] : image.terms()) {
      int row = hm.range.index_of(m);
      if (row < 0) throw std::runtime_error("heat image leaves the homogeneous range (grading bug)");
      hm.m(row, j) = c;
    }
  }
  return hm;
}

HeatSolver::HeatSolver(const CarnotGroup& g, const std::vector<PolyVectorField>& horizontal,
                       const RatMatrix& a0, int degree)
    : group_(&g), hm_(heat_matrix_homogeneous(g, horizontal, a0, degree)) {
  check_spd(a0);
  // Min-norm right inverse M^T (M M^T)^{-1}; M has full row rank whenever
  // every homogeneous polynomial of degree d-2 is attained, which the
  // surjectivity result guarantees for valid groups.
  RatMatrix mt = hm_.m.transposed();
  RatMatrix gram = hm_.m * mt;
  int rows = gram.rows();
  RatMatrix aug(rows, 2 * rows);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < rows; ++c) aug(r, c) = gram(r, c);
    aug(r, rows + r) = 1;
  }
  RrefResult rr = rref(std::move(aug));
  int rk = 0;
  for (int pc : rr.pivot_cols)
    if (pc < rows) ++rk;
  rank_defect_ = rows - rk;
  if (rank_defect_ != 0) {
    std::ostringstream msg;
    msg << "heat operator not surjective on degree " << degree << ": rank " << rk << " of "
        << rows << " (defect " << rank_defect_ << ")";
    throw std::runtime_error(msg.str());
  }
  RatMatrix gram_inv(rows, rows);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < rows; ++c) gram_inv(r, c) = rr.mat(r, rows + c);
  pinv_ = mt * gram_inv;
}

RatPoly HeatSolver::solve(const RatPoly& q_homogeneous) const {
  std::vector<Rational> q = hm_.range.coefficients_of(q_homogeneous);
  std::vector<Rational> coeffs = pinv_.apply(q);
  return hm_.domain.to_polynomial(coeffs, group_->dim());
}

RatPoly solve_heat_polynomial(const CarnotGroup& g, const std::vector<PolyVectorField>& horizontal,
                              const RatMatrix& a0, const RatPoly& q_homogeneous) {
  if (q_homogeneous.empty()) return RatPoly(g.dim());
  int dq = q_homogeneous.max_weighted_degree(g.weights());
  if (!q_homogeneous.is_weighted_homogeneous(g.weights(), dq))
    throw std::invalid_argument("right-hand side must be homogeneous");
  HeatSolver solver(g, horizontal, a0, dq + 2);
  return solver.solve(q_homogeneous);
}

std::vector<RatPoly> caloric_basis(const CarnotGroup& g, const std::vector<PolyVectorField>& horizontal,
                                   const RatMatrix& a0, int d) {
  std::vector<RatPoly> out;
  if (d < 2) {
    // Every polynomial of degree < 2 is caloric.
    PolySpaceBasis b = PolySpaceBasis::homogeneous(g, d);
    for (int i = 0; i < b.dim(); ++i) {
      RatPoly p(g.dim());
      p.add_term(b.monomial(i), Rational(1));
      out.push_back(p);
    }
    return out;
  }
  HeatMatrix hm = heat_matrix_homogeneous(g, horizontal, a0, d);
  RatMatrix ns = nullspace(hm.m);
  for (int j = 0; j < ns.cols(); ++j) {
    std::vector<Rational> coeffs(hm.domain.dim());
    for (int i = 0; i < hm.domain.dim(); ++i) coeffs[i] = ns(i, j);
    out.push_back(hm.domain.to_polynomial(coeffs, g.dim()));
  }
  return out;
}

std::vector<CaloricComponent> caloric_taylor_check(const CarnotGroup& g,
                                                   const std::vector<PolyVectorField>& horizontal,
                                                   const RatMatrix& a0, const RatPoly& u) {
  std::vector<CaloricComponent> out;
  int dmax = u.max_weighted_degree(g.weights());
  for (int d = 0; d <= dmax; ++d) {
    CaloricComponent comp;
    comp.degree = d;
    comp.component = u.homogeneous_part(g.weights(), d);
    if (comp.component.empty()) continue;
    comp.residual = heat_apply(g, horizontal, a0, comp.component);
    comp.caloric = comp.residual.empty();
    out.push_back(std::move(comp));
  }
  return out;
}

}  // namespace carnot
