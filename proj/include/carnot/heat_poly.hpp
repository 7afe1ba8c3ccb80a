#pragma once

#include <vector>

#include "carnot/basis.hpp"
#include "carnot/group.hpp"
#include "carnot/linalg_rational.hpp"
#include "carnot/vector_field.hpp"

namespace carnot {

// Validates symmetry and positive definiteness (exact Sylvester minors).
void check_spd(const RatMatrix& a0);

// H_A(0) P = dP/dt - sum a_ij(0,0) X_i X_j P, exact.
RatPoly heat_apply(const CarnotGroup& g, const std::vector<PolyVectorField>& horizontal,
                   const RatMatrix& a0, const RatPoly& p);

// Matrix of the frozen heat operator from homogeneous degree d to d-2.
struct HeatMatrix {
  PolySpaceBasis domain;  // H_d
  PolySpaceBasis range;   // H_{d-2}
  RatMatrix m;
};
HeatMatrix heat_matrix_homogeneous(const CarnotGroup& g, const std::vector<PolyVectorField>& horizontal,
                                   const RatMatrix& a0, int d);

// Solves H P = Q for homogeneous Q of degree d-2, returning the
// minimum-coefficient-norm homogeneous P of degree d. The residual is
// exactly zero; an inconsistent system raises with a rank report.
RatPoly solve_heat_polynomial(const CarnotGroup& g, const std::vector<PolyVectorField>& horizontal,
                              const RatMatrix& a0, const RatPoly& q_homogeneous);

// Right inverse of the degree-d heat matrix (columns = min-norm solutions
// for the H_{d-2} basis monomials); factored once, reused per degree.
class HeatSolver {
 public:
  HeatSolver(const CarnotGroup& g, const std::vector<PolyVectorField>& horizontal, const RatMatrix& a0,
             int degree);
  RatPoly solve(const RatPoly& q_homogeneous) const;
  const HeatMatrix& matrix() const { return hm_; }
  int rank_defect() const { return rank_defect_; }

 private:
  const CarnotGroup* group_;
  HeatMatrix hm_;
  RatMatrix pinv_;  // dim(H_d) x dim(H_{d-2})
  int rank_defect_ = 0;
};

// Basis of homogeneous caloric polynomials of degree d (nullspace of H).
std::vector<RatPoly> caloric_basis(const CarnotGroup& g, const std::vector<PolyVectorField>& horizontal,
                                   const RatMatrix& a0, int d);

struct CaloricComponent {
  int degree = 0;
  RatPoly component;
  RatPoly residual;  // H applied to the component
  bool caloric = false;
};

// Splits u into homogeneous Taylor components and applies H to each.
std::vector<CaloricComponent> caloric_taylor_check(const CarnotGroup& g,
                                                   const std::vector<PolyVectorField>& horizontal,
                                                   const RatMatrix& a0, const RatPoly& u);

RatMatrix identity_matrix(int n);

}  // namespace carnot
