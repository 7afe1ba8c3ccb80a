#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "carnot/grid.hpp"
#include "carnot/group.hpp"
#include "carnot/heat_poly.hpp"
#include "carnot/smooth.hpp"
#include "carnot/vector_field.hpp"

namespace carnot {

// Coefficient matrix a_ij(x,t) on the first layer with ellipticity data and
// the Holder-at-origin modulus of the perturbation.
struct CoefficientField {
  int m1 = 0;
  std::function<double(int, int, const SpaceTimePoint&)> entry;  // symmetric
  double lambda = 1.0;
  double Lambda = 1.0;
  double holder_alpha = 1.0;
  double holder_const = 0.0;
  bool time_dependent = true;

  static CoefficientField constant(const Eigen::MatrixXd& a);
  static CoefficientField identity(int m1);
  // delta_ij + sum_k scale_k * phi(x,t) * S_k with phi Holder at the origin.
  static CoefficientField perturbed_identity(int m1, const SmoothPtr& phi,
                                             const Eigen::MatrixXd& direction, double alpha);

  Eigen::MatrixXd eval(const SpaceTimePoint& p) const;
  // Sampled Rayleigh-quotient check of lambda |xi|^2 <= xi^T A xi <= Lambda |xi|^2.
  void check_ellipticity(const CarnotGroup& g, double box_radius, int samples,
                         std::uint64_t seed) const;
};

struct SolveConfig {
  enum class Scheme { explicit_euler, implicit_euler };
  enum class Boundary { manufactured, zero_far_field };
  Scheme scheme = Scheme::explicit_euler;
  Boundary boundary = Boundary::manufactured;
  double cfl = 0.25;
  bool parallel = true;
  bool expanded_stencil = false;   // expand X_iX_j to second-order stencils
  double epsilon_regularization = 0.0;  // diagnostic-only vertical viscosity
  double implicit_tol = 1e-10;
  int implicit_steps_per_record = 4;
};

struct SolveResult {
  GridFunction u;
  double tau = 0.0;
  std::uint64_t steps = 0;
  double row_sum_bound = 0.0;
  std::vector<double> mass_per_level;
  double min_value = 0.0;
  double max_value = 0.0;
};

// Evaluated horizontal fields usable by the numeric kernels (supports the
// B-rotation that routes constant-coefficient runs through the canonical
// operator).
struct FieldSet {
  int dim = 0;
  std::vector<std::vector<Polynomial<double>>> coeffs;  // [field][coordinate]

  static FieldSet from(const CarnotGroup& g, const std::vector<PolyVectorField>& fields);
  FieldSet rotated(const Eigen::MatrixXd& b) const;
  int count() const { return static_cast<int>(coeffs.size()); }
};

// Finite-difference solve of du/dt - sum a_ij X_i X_j u = f with data on the
// parabolic boundary. `data` supplies the initial level and (in manufactured
// mode) the spatial boundary values at all times.
SolveResult solve(const CarnotGroup& g, const FieldSet& fields, const CoefficientField& A,
                  const SpaceTimeFn& f, const SpaceTimeFn& data, const GridSpec& grid,
                  const SolveConfig& cfg);

// Serial reference of one explicit step, kept for testing the parallel path.
void explicit_step_reference(const CarnotGroup& g, const FieldSet& fields, const CoefficientField& A,
                             const SpaceTimeFn& f, const GridFunction& shape,
                             const std::vector<double>& u_cur, std::vector<double>& u_next,
                             double t, double tau);
// Parallel version of the same update (bit-identical by construction).
void explicit_step_parallel(const CarnotGroup& g, const FieldSet& fields, const CoefficientField& A,
                            const SpaceTimeFn& f, const GridFunction& shape,
                            const std::vector<double>& u_cur, std::vector<double>& u_next, double t,
                            double tau);

// f = H_A u* for a closed-form u*; exact for polynomial u* and polynomial
// coefficients.
SpaceTimeFn manufactured_rhs(const CarnotGroup& g, const std::vector<PolyVectorField>& horizontal,
                             const CoefficientField& A, const SmoothPtr& u_star);

// Lemma-style interior estimate quotient at radius r:
//   sum_{k<=2} r^k ||X^I D_t^l u||_{L^p(Q_r)} / (||u||_{L^p(Q_2r)} + r^2 ||f||_{L^p(Q_2r)}).
// Returns nullopt when both sides vanish.
std::optional<double> interior_estimate_probe(const CarnotGroup& g,
                                              const std::vector<PolyVectorField>& horizontal,
                                              const GridFunction& u, const GridFunction& f, double r,
                                              double p);

struct GaussianFit {
  double C = 0.0;
  double b = 0.0;
  double pointwise_C = 0.0;    // C * max_s (1+s)^{Q/2} e^{-b s}
  double pointwise_sup = 0.0;  // max over nodes of u * |(x,t)|^Q
  bool pointwise_ok = false;
  std::size_t nodes_used = 0;
};

struct KernelRun {
  SolveResult result;
  GaussianFit fit;
  double mass_drift_per_step = 0.0;
  double far_field_mass = 0.0;
};

// Evolves a normalized bump from t=0 and fits the Gaussian-type bound
// C t^{-Q/2} exp(-b d(x,0)^2 / t) over the recorded levels inside the late
// self-similar window [fit_t_min_frac * t1, t1].
KernelRun heat_kernel_estimate(const CarnotGroup& g, const FieldSet& fields, const Eigen::MatrixXd& a0,
                               const GridSpec& grid, const SolveConfig& cfg, double bump_sigma,
                               double fit_t_min_frac = 0.5, double fit_threshold = 1e-5);

Eigen::MatrixXd cholesky_factor(const Eigen::MatrixXd& a0);

}  // namespace carnot
