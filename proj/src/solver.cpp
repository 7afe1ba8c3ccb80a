#include "carnot/solver.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <memory>
#include <limits>
#include <random>
#include <stdexcept>

#include "carnot/geometry.hpp"

namespace carnot {

CoefficientField CoefficientField::constant(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("coefficient matrix must be square");
  if (!a.isApprox(a.transpose(), 1e-14)) throw std::invalid_argument("coefficient matrix must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  double lo = es.eigenvalues().minCoeff();
  double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0)) throw std::invalid_argument("coefficient matrix is not positive definite");
  CoefficientField cf;
  cf.m1 = static_cast<int>(a.rows());
  Eigen::MatrixXd copy = a;
  cf.entry = [copy](int i, int j, const SpaceTimePoint&) { return copy(i, j); };
  cf.lambda = lo;
  cf.Lambda = hi;
  cf.holder_alpha = 1.0;
  cf.holder_const = 0.0;
  cf.time_dependent = false;
  return cf;
}

CoefficientField CoefficientField::identity(int m1) {
  return constant(Eigen::MatrixXd::Identity(m1, m1));
}

CoefficientField CoefficientField::perturbed_identity(int m1, const SmoothPtr& phi,
                                                      const Eigen::MatrixXd& direction, double alpha) {
  if (direction.rows() != m1 || direction.cols() != m1)
    throw std::invalid_argument("perturbation direction shape mismatch");
  if (!direction.isApprox(direction.transpose(), 1e-14))
    throw std::invalid_argument("perturbation direction must be symmetric");
  CoefficientField cf;
  cf.m1 = m1;
  Eigen::MatrixXd dir = direction;
  SmoothPtr mod = phi;
  cf.entry = [dir, mod](int i, int j, const SpaceTimePoint& p) {
    double base = (i == j) ? 1.0 : 0.0;
    return base + dir(i, j) * mod->value(p);
  };
  double dirnorm = direction.cwiseAbs().rowwise().sum().maxCoeff();
  cf.holder_alpha = alpha;
  cf.holder_const = dirnorm;
  cf.time_dependent = true;
  // Ellipticity bounds filled by check_ellipticity against the actual box.
  cf.lambda = 1.0;
  cf.Lambda = 1.0;
  return cf;
}

Eigen::MatrixXd CoefficientField::eval(const SpaceTimePoint& p) const {
  Eigen::MatrixXd a(m1, m1);
  for (int i = 0; i < m1; ++i)
    for (int j = i; j < m1; ++j) {
      a(i, j) = entry(i, j, p);
      a(j, i) = a(i, j);
    }
  return a;
}

void CoefficientField::check_ellipticity(const CarnotGroup& g, double box_radius, int samples,
                                         std::uint64_t seed) const {
  std::mt19937_64 rng(derive_seed(seed, 0xe11));
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::normal_distribution<double> gauss;
  for (int s = 0; s < samples; ++s) {
    GroupPoint x(g.dim());
    for (int i = 0; i < g.dim(); ++i) x[i] = u(rng) * std::pow(box_radius, g.weight(i));
    SpaceTimePoint p(std::move(x), u(rng) * box_radius * box_radius);
    Eigen::MatrixXd a = eval(p);
    Eigen::VectorXd xi(m1);
    for (int i = 0; i < m1; ++i) xi(i) = gauss(rng);
    double q = xi.transpose() * a * xi;
    double n2 = xi.squaredNorm();
    if (q < lambda * n2 - 1e-12 || q > Lambda * n2 + 1e-12)
      throw std::runtime_error("sampled Rayleigh quotient violates the ellipticity constants");
  }
}

FieldSet FieldSet::from(const CarnotGroup& g, const std::vector<PolyVectorField>& fields) {
  FieldSet fs;
  fs.dim = g.dim();
  fs.coeffs.resize(fields.size());
  for (std::size_t i = 0; i < fields.size(); ++i) {
    fs.coeffs[i].reserve(fs.dim);
    for (int m = 0; m < fs.dim; ++m) fs.coeffs[i].push_back(to_double_poly(fields[i].coeffs[m]));
  }
  return fs;
}

FieldSet FieldSet::rotated(const Eigen::MatrixXd& b) const {
  if (b.cols() != count()) throw std::invalid_argument("rotation shape mismatch");
  FieldSet out;
  out.dim = dim;
  out.coeffs.assign(b.rows(), std::vector<Polynomial<double>>(dim, Polynomial<double>(dim)));
  for (int i = 0; i < b.rows(); ++i)
    for (int j = 0; j < count(); ++j) {
      if (b(i, j) == 0.0) continue;
      for (int m = 0; m < dim; ++m) out.coeffs[i][m] += coeffs[j][m] * b(i, j);
    }
  return out;
}

Eigen::MatrixXd cholesky_factor(const Eigen::MatrixXd& a0) {
  Eigen::LLT<Eigen::MatrixXd> llt(a0);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("matrix is not positive definite");
  return llt.matrixL();
}

namespace {

// Precomputed geometry and coefficient tables for the explicit stepper.
struct StepTables {
  int size = 0, dim = 0, m1 = 0;
  std::vector<std::vector<double>> node_x;       // [node] coords
  std::vector<int8_t> axis_loc;                  // [node*dim+axis]: 0 lo, 1 mid, 2 hi
  std::vector<int> margin1_nodes;                // margin >= 1
  std::vector<int> boundary_nodes;               // margin == 0
  // b values per field per coordinate (only nonzero coefficient polys kept)
  std::vector<std::vector<std::pair<int, std::vector<double>>>> b;  // [i] -> (m, vals)
  std::vector<int> strides;
  std::vector<double> inv2h;
  double cell_volume = 1.0;

  StepTables(const CarnotGroup& g, const FieldSet& fields, const GridFunction& shape) {
    size = shape.spatial_size();
    dim = shape.spatial_dim();
    m1 = fields.count();
    node_x.resize(size);
    axis_loc.resize(std::size_t(size) * dim);
    strides.resize(dim);
    inv2h.resize(dim);
    cell_volume = 1.0;
    for (int a = 0; a < dim; ++a) {
      strides[a] = shape.stride(a);
      inv2h[a] = 0.5 / shape.spec().spacing(a);
      cell_volume *= shape.spec().spacing(a);
    }
    std::vector<int> idx;
    for (int f = 0; f < size; ++f) {
      node_x[f] = shape.node_coords(f);
      shape.unflatten(f, idx);
      int margin = INT32_MAX;
      for (int a = 0; a < dim; ++a) {
        int loc = (idx[a] == 0) ? 0 : (idx[a] == shape.spec().nodes[a] - 1 ? 2 : 1);
        axis_loc[std::size_t(f) * dim + a] = static_cast<int8_t>(loc);
        margin = std::min(margin, std::min(idx[a], shape.spec().nodes[a] - 1 - idx[a]));
      }
      (margin >= 1 ? margin1_nodes : boundary_nodes).push_back(f);
    }
    b.resize(m1);
    for (int i = 0; i < m1; ++i)
      for (int m = 0; m < dim; ++m) {
        if (fields.coeffs[i][m].empty()) continue;
        std::vector<double> vals(size);
        for (int f = 0; f < size; ++f) vals[f] = fields.coeffs[i][m].eval(node_x[f]);
        b[i].emplace_back(m, std::move(vals));
      }
  }

  inline double axis_diff(const std::vector<double>& v, int f, int a) const {
    int loc = axis_loc[std::size_t(f) * dim + a];
    int s = strides[a];
    if (loc == 1) return (v[f + s] - v[f - s]) * inv2h[a];
    if (loc == 0) return (-3.0 * v[f] + 4.0 * v[f + s] - v[f + 2 * s]) * inv2h[a];
    return (3.0 * v[f] - 4.0 * v[f - s] + v[f - 2 * s]) * inv2h[a];
  }

  void apply_field(int i, const std::vector<double>& u, std::vector<double>& out, bool parallel) const {
#pragma omp parallel for schedule(static) if (parallel)
    for (int f = 0; f < size; ++f) {
      double acc = 0.0;
      for (const auto& [m, vals] : b[i])
        if (vals[f] != 0.0) acc += vals[f] * axis_diff(u, f, m);
      out[f] = acc;
    }
  }
};

struct CoefficientTable {
  int m1 = 0;
  bool constant = false;
  std::vector<std::vector<double>> vals;  // [pair(i<=j)] per node
  std::vector<std::pair<int, int>> pairs;

  void build(const CoefficientField& A, const StepTables& tab, double t) {
    m1 = A.m1;
    if (pairs.empty())
      for (int i = 0; i < m1; ++i)
        for (int j = i; j < m1; ++j) pairs.emplace_back(i, j);
    vals.assign(pairs.size(), std::vector<double>(tab.size));
    for (std::size_t pi = 0; pi < pairs.size(); ++pi) {
      auto [i, j] = pairs[pi];
#pragma omp parallel for schedule(static)
      for (int f = 0; f < tab.size; ++f)
        vals[pi][f] = A.entry(i, j, SpaceTimePoint(GroupPoint(tab.node_x[f]), t));
    }
  }
  inline double a(int pi, int f) const { return vals[pi][f]; }
};

// One explicit Euler step: composed first-order stencils; updates margin>=1
// nodes, leaves boundary nodes untouched (caller refreshes them from data).
void explicit_step_impl(const StepTables& tab, const CoefficientTable& coeff,
                        const std::vector<std::vector<double>>& y,
                        const std::vector<double>& u_cur, std::vector<double>& u_next,
                        const std::vector<double>& source, double tau, double epsilon,
                        bool parallel) {
  int m1 = tab.m1;
#pragma omp parallel for schedule(static) if (parallel)
  for (std::size_t k = 0; k < tab.margin1_nodes.size(); ++k) {
    int f = tab.margin1_nodes[k];
    double lap = 0.0;
    int pi = 0;
    for (int i = 0; i < m1; ++i)
      for (int j = i; j < m1; ++j, ++pi) {
        double aij = coeff.a(pi, f);
        if (aij == 0.0) continue;
        double xiyj = 0.0;
        for (const auto& [m, vals] : tab.b[i])
          if (vals[f] != 0.0) xiyj += vals[f] * tab.axis_diff(y[j], f, m);
        if (i != j) {
          double xjyi = 0.0;
          for (const auto& [m, vals] : tab.b[j])
            if (vals[f] != 0.0) xjyi += vals[f] * tab.axis_diff(y[i], f, m);
          lap += aij * (xiyj + xjyi);
        } else {
          lap += aij * xiyj;
        }
      }
    if (epsilon > 0.0) {
      for (int a = 0; a < tab.dim; ++a) {
        int s = tab.strides[a];
        double h2 = (0.5 / tab.inv2h[a]) * (0.5 / tab.inv2h[a]);
        lap += epsilon * (u_cur[f + s] - 2.0 * u_cur[f] + u_cur[f - s]) / h2;
      }
    }
    u_next[f] = u_cur[f] + tau * (lap + source[f]);
  }
}

// Expanded form sum_mn A_mn(x) d_mn + sum_m B_m(x) d_m of the operator
// sum_ij a_ij X_i X_j, with A_mn = sum_ij a_ij b_i^m b_j^n and
// B_m = sum_ij a_ij (X_i b_j^m). Narrow 3-point second differences on the
// diagonal, 4-point centered cross terms.
struct ExpandedTables {
  int size = 0, dim = 0, m1 = 0;
  // per (i,j) field pair: sparse list over coordinate pairs (m,n) of
  // pointwise products b_i^m * b_j^n, plus the first-order parts X_i b_j^m.
  struct PairEntry {
    int m, n;
    std::vector<double> vals;
  };
  std::vector<std::vector<PairEntry>> second;  // [pair index i*m1+j]
  std::vector<std::vector<PairEntry>> first;   // [pair index], n unused
  std::vector<double> inv_h2;

  ExpandedTables(const CarnotGroup& g, const FieldSet& fields, const StepTables& tab) {
    size = tab.size;
    dim = tab.dim;
    m1 = tab.m1;
    inv_h2.resize(dim);
    for (int a = 0; a < dim; ++a) inv_h2[a] = 4.0 * tab.inv2h[a] * tab.inv2h[a];
    second.resize(m1 * m1);
    first.resize(m1 * m1);
    for (int i = 0; i < m1; ++i)
      for (int j = 0; j < m1; ++j) {
        for (int m = 0; m < dim; ++m) {
          if (fields.coeffs[i][m].empty()) continue;
          for (int n = 0; n < dim; ++n) {
            if (fields.coeffs[j][n].empty()) continue;
            Polynomial<double> prod = fields.coeffs[i][m] * fields.coeffs[j][n];
            PairEntry e;
            e.m = m;
            e.n = n;
            e.vals.resize(size);
            for (int f = 0; f < size; ++f) e.vals[f] = prod.eval(tab.node_x[f]);
            second[i * m1 + j].push_back(std::move(e));
          }
          // X_i b_j^m assembled from the numeric field polynomials.
          Polynomial<double> xb(dim);
          for (int k = 0; k < dim; ++k) {
            if (fields.coeffs[i][k].empty()) continue;
            Polynomial<double> d = fields.coeffs[j][m].derivative(k);
            if (!d.empty()) xb += fields.coeffs[i][k] * d;
          }
          if (!xb.empty()) {
            PairEntry e;
            e.m = m;
            e.n = -1;
            e.vals.resize(size);
            for (int f = 0; f < size; ++f) e.vals[f] = xb.eval(tab.node_x[f]);
            first[i * m1 + j].push_back(std::move(e));
          }
        }
      }
  }
};

void expanded_step_impl(const StepTables& tab, const ExpandedTables& ext,
                        const CoefficientTable& coeff, const std::vector<double>& u_cur,
                        std::vector<double>& u_next, const std::vector<double>& source, double tau,
                        double epsilon, bool parallel) {
  int m1 = tab.m1;
#pragma omp parallel for schedule(static) if (parallel)
  for (std::size_t k = 0; k < tab.margin1_nodes.size(); ++k) {
    int f = tab.margin1_nodes[k];
    double lap = 0.0;
    int pi = 0;
    for (int i = 0; i < m1; ++i)
      for (int j = i; j < m1; ++j, ++pi) {
        double aij = coeff.a(pi, f);
        if (aij == 0.0) continue;
        double sym = (i == j) ? 1.0 : 1.0;  // both (i,j) and (j,i) handled below
        double acc = 0.0;
        auto add_pair = [&](int pair_index) {
          for (const auto& e : ext.second[pair_index]) {
            double c = e.vals[f];
            if (c == 0.0) continue;
            if (e.m == e.n) {
              int s = tab.strides[e.m];
              acc += c * (u_cur[f + s] - 2.0 * u_cur[f] + u_cur[f - s]) * ext.inv_h2[e.m];
            } else {
              int sm = tab.strides[e.m], sn = tab.strides[e.n];
              acc += c *
                     (u_cur[f + sm + sn] - u_cur[f + sm - sn] - u_cur[f - sm + sn] +
                      u_cur[f - sm - sn]) *
                     tab.inv2h[e.m] * tab.inv2h[e.n];
            }
          }
          for (const auto& e : ext.first[pair_index]) {
            double c = e.vals[f];
            if (c != 0.0) acc += c * tab.axis_diff(u_cur, f, e.m);
          }
        };
        add_pair(i * m1 + j);
        if (i != j) add_pair(j * m1 + i);
        lap += aij * sym * acc;
      }
    if (epsilon > 0.0) {
      for (int a = 0; a < tab.dim; ++a) {
        int s = tab.strides[a];
        lap += epsilon * (u_cur[f + s] - 2.0 * u_cur[f] + u_cur[f - s]) * ext.inv_h2[a];
      }
    }
    u_next[f] = u_cur[f] + tau * (lap + source[f]);
  }
}

double expanded_row_sum(const StepTables& tab, const ExpandedTables& ext,
                        const CoefficientTable& coeff, double epsilon) {
  double s_max = 0.0;
  for (int f = 0; f < tab.size; ++f) {
    double s = 0.0;
    int pi = 0;
    for (int i = 0; i < ext.m1; ++i)
      for (int j = i; j < ext.m1; ++j, ++pi) {
        double aij = std::fabs(coeff.vals[pi][f]);
        if (aij == 0.0) continue;
        double acc = 0.0;
        for (int pair_index : {i * ext.m1 + j, j * ext.m1 + i}) {
          if (i == j && pair_index != i * ext.m1 + j) continue;
          for (const auto& e : ext.second[pair_index]) {
            double c = std::fabs(e.vals[f]);
            if (e.m == e.n)
              acc += 4.0 * c * ext.inv_h2[e.m];
            else
              acc += 4.0 * c * tab.inv2h[e.m] * tab.inv2h[e.n];
          }
          for (const auto& e : ext.first[pair_index])
            acc += 2.0 * std::fabs(e.vals[f]) * 2.0 * tab.inv2h[e.m];
          if (i == j) break;
        }
        s += aij * acc;
      }
    if (epsilon > 0.0)
      for (int a = 0; a < tab.dim; ++a) s += 4.0 * epsilon * ext.inv_h2[a];
    s_max = std::max(s_max, s);
  }
  return s_max;
}

double stability_row_sum(const StepTables& tab, const CoefficientTable& coeff, double epsilon) {
  // Gershgorin-type bound: row sum of the composed stencil bounded by
  // sum_ij |a_ij| B_i(v) max_nbhd B_j, with B_i = sum_m |b_i^m| / h_m.
  int m1 = tab.m1;
  std::vector<std::vector<double>> bs(m1, std::vector<double>(tab.size, 0.0));
  for (int i = 0; i < m1; ++i)
    for (const auto& [m, vals] : tab.b[i])
      for (int f = 0; f < tab.size; ++f) bs[i][f] += std::fabs(vals[f]) * 2.0 * tab.inv2h[m];
  // neighborhood max along each axis
  std::vector<std::vector<double>> bsmax = bs;
  for (int i = 0; i < m1; ++i)
    for (int a = 0; a < tab.dim; ++a) {
      std::vector<double> tmp = bsmax[i];
      for (int f = 0; f < tab.size; ++f) {
        int loc = tab.axis_loc[std::size_t(f) * tab.dim + a];
        double v = tmp[f];
        if (loc != 0) v = std::max(v, tmp[f - tab.strides[a]]);
        if (loc != 2) v = std::max(v, tmp[f + tab.strides[a]]);
        bsmax[i][f] = v;
      }
    }
  double s_max = 0.0;
  for (int f = 0; f < tab.size; ++f) {
    double s = 0.0;
    int pi = 0;
    for (int i = 0; i < m1; ++i)
      for (int j = i; j < m1; ++j, ++pi) {
        double aij = std::fabs(coeff.vals[pi][f]);
        if (aij == 0.0) continue;
        double contrib = aij * bs[i][f] * bsmax[j][f];
        if (i != j) contrib += aij * bs[j][f] * bsmax[i][f];
        s += contrib;
      }
    if (epsilon > 0.0)
      for (int a = 0; a < tab.dim; ++a) s += epsilon * 8.0 * tab.inv2h[a] * tab.inv2h[a];
    s_max = std::max(s_max, s);
  }
  return s_max;
}

}  // namespace

void explicit_step_reference(const CarnotGroup& g, const FieldSet& fields, const CoefficientField& A,
                             const SpaceTimeFn& f, const GridFunction& shape,
                             const std::vector<double>& u_cur, std::vector<double>& u_next, double t,
                             double tau) {
  StepTables tab(g, fields, shape);
  CoefficientTable coeff;
  coeff.build(A, tab, t);
  std::vector<std::vector<double>> y(tab.m1, std::vector<double>(tab.size));
  for (int j = 0; j < tab.m1; ++j) tab.apply_field(j, u_cur, y[j], false);
  std::vector<double> source(tab.size, 0.0);
  for (int v = 0; v < tab.size; ++v)
    source[v] = f ? f(SpaceTimePoint(GroupPoint(tab.node_x[v]), t)) : 0.0;
  explicit_step_impl(tab, coeff, y, u_cur, u_next, source, tau, 0.0, false);
}

void explicit_step_parallel(const CarnotGroup& g, const FieldSet& fields, const CoefficientField& A,
                            const SpaceTimeFn& f, const GridFunction& shape,
                            const std::vector<double>& u_cur, std::vector<double>& u_next, double t,
                            double tau) {
  StepTables tab(g, fields, shape);
  CoefficientTable coeff;
  coeff.build(A, tab, t);
  std::vector<std::vector<double>> y(tab.m1, std::vector<double>(tab.size));
  for (int j = 0; j < tab.m1; ++j) tab.apply_field(j, u_cur, y[j], true);
  std::vector<double> source(tab.size, 0.0);
#pragma omp parallel for schedule(static)
  for (int v = 0; v < tab.size; ++v)
    source[v] = f ? f(SpaceTimePoint(GroupPoint(tab.node_x[v]), t)) : 0.0;
  explicit_step_impl(tab, coeff, y, u_cur, u_next, source, tau, 0.0, true);
}

namespace {

SolveResult solve_explicit(const CarnotGroup& g, const FieldSet& fields, const CoefficientField& A,
                           const SpaceTimeFn& f, const SpaceTimeFn& data, const GridSpec& grid,
                           const SolveConfig& cfg) {
  GridFunction out(grid, g.dim());
  StepTables tab(g, fields, out);
  CoefficientTable coeff;
  coeff.build(A, tab, grid.t0);

  std::unique_ptr<ExpandedTables> ext;
  if (cfg.expanded_stencil) ext = std::make_unique<ExpandedTables>(g, fields, tab);

  double row_sum = ext ? expanded_row_sum(tab, *ext, coeff, cfg.epsilon_regularization)
                       : stability_row_sum(tab, coeff, cfg.epsilon_regularization);
  double tau_max = cfg.cfl * 2.0 / std::max(row_sum, 1e-300);
  double rec_dt = grid.record_dt();
  std::uint64_t stride = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(rec_dt / tau_max)));
  double tau = rec_dt / static_cast<double>(stride);
  std::uint64_t steps = stride * static_cast<std::uint64_t>(grid.time_nodes - 1);

  SolveResult res;
  res.tau = tau;
  res.steps = steps;
  res.row_sum_bound = row_sum;

  std::vector<double> u_cur(tab.size), u_next(tab.size), source(tab.size, 0.0);
  bool zero_boundary = cfg.boundary == SolveConfig::Boundary::zero_far_field;
  for (int v = 0; v < tab.size; ++v)
    u_cur[v] = data ? data(SpaceTimePoint(GroupPoint(tab.node_x[v]), grid.t0)) : 0.0;

  std::vector<std::vector<double>> y(tab.m1, std::vector<double>(tab.size));

  auto record = [&](int level) {
    double mass = 0.0, mn = u_cur[0], mx = u_cur[0];
    for (int v = 0; v < tab.size; ++v) {
      out.at(level, v) = u_cur[v];
      mass += u_cur[v];
      mn = std::min(mn, u_cur[v]);
      mx = std::max(mx, u_cur[v]);
    }
    res.mass_per_level.push_back(mass * tab.cell_volume);
    if (level == 0) {
      res.min_value = mn;
      res.max_value = mx;
    } else {
      res.min_value = std::min(res.min_value, mn);
      res.max_value = std::max(res.max_value, mx);
    }
  };
  record(0);

  for (std::uint64_t step = 0; step < steps; ++step) {
    double t = grid.t0 + static_cast<double>(step) * tau;
    double t_next = grid.t0 + static_cast<double>(step + 1) * tau;
    if (A.time_dependent && step > 0) coeff.build(A, tab, t);
    if (!ext)
      for (int j = 0; j < tab.m1; ++j) tab.apply_field(j, u_cur, y[j], cfg.parallel);
    if (f) {
#pragma omp parallel for schedule(static) if (cfg.parallel)
      for (int v = 0; v < tab.size; ++v)
        source[v] = f(SpaceTimePoint(GroupPoint(tab.node_x[v]), t));
    }
    if (ext)
      expanded_step_impl(tab, *ext, coeff, u_cur, u_next, source, tau, cfg.epsilon_regularization,
                         cfg.parallel);
    else
      explicit_step_impl(tab, coeff, y, u_cur, u_next, source, tau, cfg.epsilon_regularization,
                         cfg.parallel);
    // Parabolic boundary data on the spatial boundary nodes.
    if (zero_boundary) {
      for (int v : tab.boundary_nodes) u_next[v] = 0.0;
    } else {
#pragma omp parallel for schedule(static) if (cfg.parallel)
      for (std::size_t k = 0; k < tab.boundary_nodes.size(); ++k) {
        int v = tab.boundary_nodes[k];
        u_next[v] = data ? data(SpaceTimePoint(GroupPoint(tab.node_x[v]), t_next)) : 0.0;
      }
    }
    std::swap(u_cur, u_next);
    for (double v : u_cur)
      if (!std::isfinite(v))
        throw std::runtime_error("solver produced a non-finite value at step " + std::to_string(step));
    if ((step + 1) % stride == 0) record(static_cast<int>((step + 1) / stride));
  }
  res.u = std::move(out);
  return res;
}

SolveResult solve_implicit(const CarnotGroup& g, const FieldSet& fields, const CoefficientField& A,
                           const SpaceTimeFn& f, const SpaceTimeFn& data, const GridSpec& grid,
                           const SolveConfig& cfg) {
  using Sparse = Eigen::SparseMatrix<double>;
  GridFunction out(grid, g.dim());
  StepTables tab(g, fields, out);
  int size = tab.size;

  // First-order field matrices, then composed products.
  std::vector<Sparse> xi(tab.m1, Sparse(size, size));
  for (int i = 0; i < tab.m1; ++i) {
    std::vector<Eigen::Triplet<double>> trips;
    for (int v = 0; v < size; ++v) {
      for (const auto& [m, vals] : tab.b[i]) {
        double c = vals[v];
        if (c == 0.0) continue;
        int s = tab.strides[m];
        int loc = tab.axis_loc[std::size_t(v) * tab.dim + m];
        double i2h = tab.inv2h[m];
        if (loc == 1) {
          trips.emplace_back(v, v + s, c * i2h);
          trips.emplace_back(v, v - s, -c * i2h);
        } else if (loc == 0) {
          trips.emplace_back(v, v, -3.0 * c * i2h);
          trips.emplace_back(v, v + s, 4.0 * c * i2h);
          trips.emplace_back(v, v + 2 * s, -c * i2h);
        } else {
          trips.emplace_back(v, v, 3.0 * c * i2h);
          trips.emplace_back(v, v - s, -4.0 * c * i2h);
          trips.emplace_back(v, v - 2 * s, c * i2h);
        }
      }
    }
    xi[i].setFromTriplets(trips.begin(), trips.end());
  }
  std::vector<std::vector<Sparse>> pij(tab.m1, std::vector<Sparse>(tab.m1));
  for (int i = 0; i < tab.m1; ++i)
    for (int j = 0; j < tab.m1; ++j) pij[i][j] = (xi[i] * xi[j]).pruned();

  int substeps = std::max(1, cfg.implicit_steps_per_record);
  double tau = grid.record_dt() / substeps;
  SolveResult res;
  res.tau = tau;
  res.steps = static_cast<std::uint64_t>(substeps) * (grid.time_nodes - 1);
  res.row_sum_bound = 0.0;

  std::vector<double> mask(size, 1.0);
  for (int v : tab.boundary_nodes) mask[v] = 0.0;
  Eigen::VectorXd u(size);
  bool zero_boundary = cfg.boundary == SolveConfig::Boundary::zero_far_field;
  for (int v = 0; v < size; ++v)
    u(v) = data ? data(SpaceTimePoint(GroupPoint(tab.node_x[v]), grid.t0)) : 0.0;

  auto record = [&](int level) {
    double mass = 0.0;
    for (int v = 0; v < size; ++v) {
      out.at(level, v) = u(v);
      mass += u(v);
    }
    res.mass_per_level.push_back(mass * tab.cell_volume);
    double mn = u.minCoeff(), mx = u.maxCoeff();
    if (level == 0) {
      res.min_value = mn;
      res.max_value = mx;
    } else {
      res.min_value = std::min(res.min_value, mn);
      res.max_value = std::max(res.max_value, mx);
    }
  };
  record(0);

  CoefficientTable coeff;
  for (int level = 1; level < grid.time_nodes; ++level) {
    for (int sub = 0; sub < substeps; ++sub) {
      double t_next = grid.t0 + ((level - 1) * substeps + sub + 1) * tau;
      coeff.build(A, tab, t_next);
      Sparse m(size, size);
      int pi = 0;
      for (int i = 0; i < tab.m1; ++i)
        for (int j = i; j < tab.m1; ++j, ++pi) {
          Eigen::VectorXd diag = Eigen::Map<Eigen::VectorXd>(coeff.vals[pi].data(), size);
          Sparse term = diag.asDiagonal() * pij[i][j];
          if (i != j) term = term + Sparse(diag.asDiagonal() * pij[j][i]);
          m += term;
        }
      // Zero the boundary rows; those nodes carry Dirichlet data.
      Eigen::VectorXd maskv = Eigen::Map<Eigen::VectorXd>(mask.data(), size);
      Sparse sys = Sparse(maskv.asDiagonal() * m) * (-tau);
      for (int v = 0; v < size; ++v) sys.coeffRef(v, v) += 1.0;
      sys.makeCompressed();

      Eigen::VectorXd rhs = u;
      for (int v = 0; v < size; ++v) {
        if (mask[v] == 0.0) {
          rhs(v) = zero_boundary
                       ? 0.0
                       : (data ? data(SpaceTimePoint(GroupPoint(tab.node_x[v]), t_next)) : 0.0);
        } else if (f) {
          rhs(v) += tau * f(SpaceTimePoint(GroupPoint(tab.node_x[v]), t_next));
        }
      }
      Eigen::BiCGSTAB<Sparse, Eigen::IncompleteLUT<double>> solver;
      solver.setTolerance(cfg.implicit_tol);
      solver.compute(sys);
      u = solver.solveWithGuess(rhs, u);
      if (solver.info() != Eigen::Success)
        throw std::runtime_error("implicit linear solve failed to converge");
    }
    record(level);
  }
  res.u = std::move(out);
  return res;
}

}  // namespace

SolveResult solve(const CarnotGroup& g, const FieldSet& fields, const CoefficientField& A,
                  const SpaceTimeFn& f, const SpaceTimeFn& data, const GridSpec& grid,
                  const SolveConfig& cfg) {
  GridSpec checked = grid;
  checked.validate(g.dim());
  if (cfg.scheme == SolveConfig::Scheme::explicit_euler)
    return solve_explicit(g, fields, A, f, data, checked, cfg);
  return solve_implicit(g, fields, A, f, data, checked, cfg);
}

SpaceTimeFn manufactured_rhs(const CarnotGroup& g, const std::vector<PolyVectorField>& horizontal,
                             const CoefficientField& A, const SmoothPtr& u_star) {
  auto ops = std::make_shared<HorizontalOps>(g, horizontal);
  CoefficientField coeff = A;
  SmoothPtr u = u_star;
  int m1 = A.m1;
  return [ops, coeff, u, m1](const SpaceTimePoint& p) {
    Eigen::MatrixXd second = ops->second_matrix(*u, p);
    double lap = 0.0;
    for (int i = 0; i < m1; ++i)
      for (int j = 0; j < m1; ++j) lap += coeff.entry(std::min(i, j), std::max(i, j), p) * second(i, j);
    return u->dt(p) - lap;
  };
}

std::optional<double> interior_estimate_probe(const CarnotGroup& g,
                                              const std::vector<PolyVectorField>& horizontal,
                                              const GridFunction& u, const GridFunction& f, double r,
                                              double p) {
  SpaceTimePoint origin(GroupPoint(g.dim()), 0.0);
  Cylinder inner(origin, r), outer(origin, 2.0 * r);
  double lhs = 0.0;
  int m1 = g.horizontal_dim();
  lhs += lp_norm_on_cylinder(g, u, inner, p);
  for (int i = 0; i < m1; ++i) {
    GridFunction d = apply_derivative_fd(g, horizontal, u, DerivativeMultiIndex{{i}, 0});
    lhs += r * lp_norm_on_cylinder(g, d, inner, p);
  }
  for (int i = 0; i < m1; ++i)
    for (int j = 0; j < m1; ++j) {
      GridFunction d = apply_derivative_fd(g, horizontal, u, DerivativeMultiIndex{{i, j}, 0});
      lhs += r * r * lp_norm_on_cylinder(g, d, inner, p);
    }
  GridFunction ut = apply_derivative_fd(g, horizontal, u, DerivativeMultiIndex{{}, 1});
  lhs += r * r * lp_norm_on_cylinder(g, ut, inner, p);

  double rhs = lp_norm_on_cylinder(g, u, outer, p) + r * r * lp_norm_on_cylinder(g, f, outer, p);
  if (rhs < 1e-300) {
    if (lhs < 1e-300) return std::nullopt;  // 0/0: undefined
    return std::numeric_limits<double>::infinity();
  }
  return lhs / rhs;
}

KernelRun heat_kernel_estimate(const CarnotGroup& g, const FieldSet& fields, const Eigen::MatrixXd& a0,
                               const GridSpec& grid, const SolveConfig& cfg, double bump_sigma,
                               double fit_t_min_frac, double fit_threshold) {
  KernelRun run;
  CoefficientField A = CoefficientField::constant(a0);

  // Normalized discrete bump a few cells wide; wide enough to avoid
  // exciting the parity modes of the wide composed stencil.
  GridFunction shape(grid, g.dim());
  int size = shape.spatial_size();
  std::vector<double> bump(size, 0.0);
  double mass = 0.0;
  double cell = 1.0;
  for (int a = 0; a < g.dim(); ++a) cell *= shape.spec().spacing(a);
  for (int v = 0; v < size; ++v) {
    auto x = shape.node_coords(v);
    double q = 0.0;
    for (int a = 0; a < g.dim(); ++a) {
      double s = std::pow(bump_sigma, g.weight(a));
      q += (x[a] / s) * (x[a] / s);
    }
    bump[v] = q < 1.0 ? std::exp(-q / (1.0 - q)) : 0.0;
    mass += bump[v] * cell;
  }
  for (auto& v : bump) v /= mass;

  auto initial = [&shape, &bump](const SpaceTimePoint& p) {
    // Only queried at t0 on grid nodes; find the node by rounding.
    std::vector<int> idx(shape.spatial_dim());
    for (int a = 0; a < shape.spatial_dim(); ++a) {
      double s = (p.x[a] - shape.spec().lo[a]) / shape.spec().spacing(a);
      idx[a] = static_cast<int>(std::lround(s));
    }
    return bump[shape.flat_index(idx)];
  };

  SolveConfig kcfg = cfg;
  kcfg.boundary = SolveConfig::Boundary::zero_far_field;
  kcfg.expanded_stencil = true;
  SolveResult sr = solve(g, fields, A, nullptr, initial, grid, kcfg);

  // Mass bookkeeping.
  double drift = 0.0;
  for (std::size_t l = 1; l < sr.mass_per_level.size(); ++l)
    drift = std::max(drift,
                     std::fabs(sr.mass_per_level[l] - sr.mass_per_level[l - 1]) /
                         (static_cast<double>(sr.steps) / (sr.mass_per_level.size() - 1)));
  run.mass_drift_per_step = drift;

  // Far-field mass at the final level: outside half the box radii.
  const GridFunction& u = sr.u;
  double far = 0.0;
  int lastlev = u.levels() - 1;
  for (int v = 0; v < size; ++v) {
    auto x = u.node_coords(v);
    bool outside = false;
    for (int a = 0; a < g.dim(); ++a)
      if (std::fabs(x[a]) > 0.85 * u.spec().hi[a]) outside = true;
    if (outside) far += u.at(lastlev, v) * cell;
  }
  run.far_field_mass = far;

  // Gaussian-bound fit over recorded levels with t > 0:
  //   ln u + (Q/2) ln t  ~  ln C - b d(x,0)^2 / t.
  double umax = sr.max_value;
  std::vector<double> ys, ss;
  GroupPoint originp(g.dim());
  double t_min = fit_t_min_frac * grid.t1;
  for (int lev = 1; lev < u.levels(); ++lev) {
    double t = u.level_time(lev);
    if (t < t_min) continue;
    double level_max = 0.0;
    for (int v = 0; v < size; ++v) level_max = std::max(level_max, u.at(lev, v));
    for (int v = 0; v < size; ++v) {
      double val = u.at(lev, v);
      if (val < fit_threshold * level_max) continue;
      GroupPoint x(u.node_coords(v));
      double d = gauge_distance(g, x, originp);
      ys.push_back(std::log(val) + 0.5 * g.hom_dim() * std::log(t));
      ss.push_back(d * d / t);
    }
  }
  GaussianFit fit;
  fit.nodes_used = ys.size();
  if (ys.size() >= 8) {
    double sm = 0, ym = 0;
    for (std::size_t i = 0; i < ys.size(); ++i) {
      sm += ss[i];
      ym += ys[i];
    }
    sm /= ys.size();
    ym /= ys.size();
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < ys.size(); ++i) {
      sxx += (ss[i] - sm) * (ss[i] - sm);
      sxy += (ss[i] - sm) * (ys[i] - ym);
    }
    fit.b = sxx > 0 ? -sxy / sxx : 0.0;
    // Raise C until the bound actually majorizes every node.
    double lnc = -1e300;
    for (std::size_t i = 0; i < ys.size(); ++i) lnc = std::max(lnc, ys[i] + fit.b * ss[i]);
    fit.C = std::exp(lnc);
    // |Gamma| <= C M(b) / |(x,t)|^Q with M(b) = max_s (1+s)^{Q/2} e^{-bs}.
    double q2 = 0.5 * g.hom_dim();
    double mb = 1.0;
    if (fit.b > 0) {
      double s_star = std::max(0.0, q2 / fit.b - 1.0);
      mb = std::pow(1.0 + s_star, q2) * std::exp(-fit.b * s_star);
    }
    fit.pointwise_C = fit.C * mb;
    double sup = 0.0;
    for (int lev = 1; lev < u.levels(); ++lev) {
      double t = u.level_time(lev);
      if (t < t_min) continue;
      for (int v = 0; v < size; ++v) {
        double val = u.at(lev, v);
        if (val <= 0.0) continue;
        GroupPoint x(u.node_coords(v));
        double rho = parabolic_gauge(g, SpaceTimePoint(x, t));
        sup = std::max(sup, val * std::pow(rho, g.hom_dim()));
      }
    }
    fit.pointwise_sup = sup;
    fit.pointwise_ok = fit.b > 0.0 && sup <= fit.pointwise_C * (1.0 + 1e-9);
  }
  run.fit = fit;
  run.result = std::move(sr);
  return run;
}

}  // namespace carnot
