#include "carnot/grid.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "carnot/geometry.hpp"

namespace carnot {

void GridSpec::validate(int expected_dim) const {
  if (static_cast<int>(lo.size()) != expected_dim || static_cast<int>(hi.size()) != expected_dim ||
      static_cast<int>(nodes.size()) != expected_dim)
    throw std::invalid_argument("grid spec dimension mismatch");
  for (int i = 0; i < expected_dim; ++i) {
    if (!(hi[i] > lo[i])) throw std::invalid_argument("grid box is empty");
    if (nodes[i] < 5) throw std::invalid_argument("grid needs at least 5 nodes per axis");
  }
  if (!(t1 > t0)) throw std::invalid_argument("time interval is empty");
  if (time_nodes < 2) throw std::invalid_argument("need at least 2 recorded levels");
}

int GridSpec::spatial_size() const {
  int s = 1;
  for (int n : nodes) s *= n;
  return s;
}

GridSpec GridSpec::covering_cylinder(const CarnotGroup& g, double radius, int nodes_per_axis,
                                     int time_nodes, double pad, double time_pad) {
  GridSpec spec;
  for (int i = 0; i < g.dim(); ++i) {
    double ext = pad * std::pow(radius, g.weight(i));
    spec.lo.push_back(-ext);
    spec.hi.push_back(ext);
    spec.nodes.push_back(nodes_per_axis);
  }
  spec.t0 = -time_pad * radius * radius;
  spec.t1 = time_pad * radius * radius;
  spec.time_nodes = time_nodes;
  return spec;
}

GridFunction::GridFunction(const GridSpec& spec, int spatial_dim) : spec_(spec), dim_(spatial_dim) {
  spec_.validate(dim_);
  spatial_size_ = spec_.spatial_size();
  strides_.resize(dim_);
  int s = 1;
  for (int i = dim_ - 1; i >= 0; --i) {
    strides_[i] = s;
    s *= spec_.nodes[i];
  }
  data_.assign(std::size_t(spatial_size_) * spec_.time_nodes, 0.0);
}

int GridFunction::flat_index(const std::vector<int>& idx) const {
  int f = 0;
  for (int i = 0; i < dim_; ++i) f += idx[i] * strides_[i];
  return f;
}

void GridFunction::unflatten(int flat, std::vector<int>& idx) const {
  idx.resize(dim_);
  for (int i = 0; i < dim_; ++i) {
    idx[i] = flat / strides_[i];
    flat %= strides_[i];
  }
}

std::vector<double> GridFunction::node_coords(int flat) const {
  std::vector<int> idx;
  unflatten(flat, idx);
  std::vector<double> x(dim_);
  for (int i = 0; i < dim_; ++i) x[i] = spec_.lo[i] + idx[i] * spec_.spacing(i);
  return x;
}

int GridFunction::boundary_margin(int flat) const {
  std::vector<int> idx;
  unflatten(flat, idx);
  int margin = INT32_MAX;
  for (int i = 0; i < dim_; ++i)
    margin = std::min(margin, std::min(idx[i], spec_.nodes[i] - 1 - idx[i]));
  return margin;
}

double GridFunction::interpolate(const SpaceTimePoint& p) const {
  std::vector<int> base(dim_);
  std::vector<double> frac(dim_);
  for (int i = 0; i < dim_; ++i) {
    double s = (p.x[i] - spec_.lo[i]) / spec_.spacing(i);
    int b = static_cast<int>(std::floor(s));
    b = std::max(0, std::min(b, spec_.nodes[i] - 2));
    double f = s - b;
    if (f < -1e-9 || f > 1.0 + 1e-9)
      throw std::out_of_range("interpolation point outside the grid box");
    base[i] = b;
    frac[i] = std::min(1.0, std::max(0.0, f));
  }
  double s = (p.t - spec_.t0) / spec_.record_dt();
  int lb = static_cast<int>(std::floor(s));
  lb = std::max(0, std::min(lb, spec_.time_nodes - 2));
  double lf = s - lb;
  if (lf < -1e-9 || lf > 1.0 + 1e-9) throw std::out_of_range("interpolation time outside the grid");
  lf = std::min(1.0, std::max(0.0, lf));

  double acc[2] = {0.0, 0.0};
  int corners = 1 << dim_;
  for (int lev = 0; lev < 2; ++lev) {
    double sum = 0.0;
    for (int c = 0; c < corners; ++c) {
      double w = 1.0;
      int flat = 0;
      for (int i = 0; i < dim_; ++i) {
        int bit = (c >> i) & 1;
        w *= bit ? frac[i] : (1.0 - frac[i]);
        flat += (base[i] + bit) * strides_[i];
      }
      sum += w * at(lb + lev, flat);
    }
    acc[lev] = sum;
  }
  return (1.0 - lf) * acc[0] + lf * acc[1];
}

void GridFunction::fill(int level, const SpaceTimeFn& f) {
  double t = level_time(level);
  for (int flat = 0; flat < spatial_size_; ++flat) {
    auto x = node_coords(flat);
    at(level, flat) = f(SpaceTimePoint(GroupPoint(x), t));
  }
}

void GridFunction::save(const std::string& path, const std::string& group_id) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "carnot-grid v1\n";
  out << "group " << group_id << "\n";
  out << "dims";
  for (int n : spec_.nodes) out << " " << n;
  out << "\nbox";
  out.precision(17);
  for (int i = 0; i < dim_; ++i) out << " " << spec_.lo[i] << " " << spec_.hi[i];
  out << "\ntime " << spec_.t0 << " " << spec_.t1 << " " << spec_.time_nodes << "\n";
  out << "data " << data_.size() << "\n";
  out.write(reinterpret_cast<const char*>(data_.data()),
            static_cast<std::streamsize>(data_.size() * sizeof(double)));
}

GridFunction GridFunction::load(const std::string& path, std::string* group_id) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::getline(in, line);
  if (line != "carnot-grid v1") throw std::runtime_error("bad grid header in " + path);
  GridSpec spec;
  std::string gid;
  std::size_t count = 0;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "group") {
      ls >> gid;
    } else if (key == "dims") {
      int n;
      while (ls >> n) spec.nodes.push_back(n);
    } else if (key == "box") {
      double a, b;
      while (ls >> a >> b) {
        spec.lo.push_back(a);
        spec.hi.push_back(b);
      }
    } else if (key == "time") {
      ls >> spec.t0 >> spec.t1 >> spec.time_nodes;
    } else if (key == "data") {
      ls >> count;
      break;
    }
  }
  GridFunction u(spec, static_cast<int>(spec.nodes.size()));
  if (count != u.data_.size()) throw std::runtime_error("grid payload size mismatch in " + path);
  in.read(reinterpret_cast<char*>(u.data_.data()), static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) throw std::runtime_error("truncated grid payload in " + path);
  if (group_id) *group_id = gid;
  return u;
}

std::string GridFunction::csv_slice(int level, int axis, const std::vector<int>& base_idx) const {
  std::ostringstream out;
  out.precision(17);
  out << "x,value\n";
  std::vector<int> idx = base_idx;
  for (int i = 0; i < spec_.nodes[axis]; ++i) {
    idx[axis] = i;
    out << spec_.lo[axis] + i * spec_.spacing(axis) << "," << at(level, flat_index(idx)) << "\n";
  }
  return out.str();
}

namespace {

// One-dimensional derivative along an axis: centered inside, one-sided
// second order at the two boundary nodes.
inline double axis_derivative(const std::vector<double>& v, int flat, int i, int n, int stride,
                              double h) {
  if (i > 0 && i < n - 1) return (v[flat + stride] - v[flat - stride]) / (2.0 * h);
  if (i == 0) return (-3.0 * v[flat] + 4.0 * v[flat + stride] - v[flat + 2 * stride]) / (2.0 * h);
  return (3.0 * v[flat] - 4.0 * v[flat - stride] + v[flat - 2 * stride]) / (2.0 * h);
}

}  // namespace

std::vector<double> apply_field_fd(const CarnotGroup& g, const PolyVectorField& field,
                                   const GridFunction& u, int level) {
  int size = u.spatial_size();
  int dim = u.spatial_dim();
  std::vector<double> level_data(size);
  for (int f = 0; f < size; ++f) level_data[f] = u.at(level, f);

  // Coefficient values per (coordinate, node), skipping zero polynomials.
  std::vector<std::pair<int, std::vector<double>>> coeffs;
  for (int m = 0; m < dim; ++m) {
    if (field.coeffs[m].empty()) continue;
    std::vector<double> vals(size);
    Polynomial<double> poly = to_double_poly(field.coeffs[m]);
    for (int f = 0; f < size; ++f) vals[f] = poly.eval(u.node_coords(f));
    coeffs.emplace_back(m, std::move(vals));
  }

  std::vector<double> out(size, 0.0);
  std::vector<int> idx;
#pragma omp parallel for schedule(static) private(idx)
  for (int f = 0; f < size; ++f) {
    u.unflatten(f, idx);
    double acc = 0.0;
    for (const auto& [m, vals] : coeffs) {
      if (vals[f] == 0.0) continue;
      acc += vals[f] * axis_derivative(level_data, f, idx[m], u.spec().nodes[m], u.stride(m),
                                       u.spec().spacing(m));
    }
    out[f] = acc;
  }
  return out;
}

GridFunction apply_derivative_fd(const CarnotGroup& g, const std::vector<PolyVectorField>& horizontal,
                                 const GridFunction& u, const DerivativeMultiIndex& d) {
  GridFunction cur = u;
  for (int l = 0; l < d.time_order; ++l) {
    if (cur.levels() < 3) throw std::out_of_range("not enough recorded levels for a time derivative");
    GridFunction next(cur.spec(), cur.spatial_dim());
    double dt = cur.spec().record_dt();
    int L = cur.levels();
    for (int lev = 0; lev < L; ++lev)
      for (int f = 0; f < cur.spatial_size(); ++f) {
        double v;
        if (lev > 0 && lev < L - 1)
          v = (cur.at(lev + 1, f) - cur.at(lev - 1, f)) / (2.0 * dt);
        else if (lev == 0)
          v = (-3.0 * cur.at(0, f) + 4.0 * cur.at(1, f) - cur.at(2, f)) / (2.0 * dt);
        else
          v = (3.0 * cur.at(L - 1, f) - 4.0 * cur.at(L - 2, f) + cur.at(L - 3, f)) / (2.0 * dt);
        next.at(lev, f) = v;
      }
    cur = std::move(next);
  }
  for (auto it = d.word.rbegin(); it != d.word.rend(); ++it) {
    GridFunction next(cur.spec(), cur.spatial_dim());
    for (int lev = 0; lev < cur.levels(); ++lev) {
      auto vals = apply_field_fd(g, horizontal.at(*it), cur, lev);
      for (int f = 0; f < cur.spatial_size(); ++f) next.at(lev, f) = vals[f];
    }
    cur = std::move(next);
  }
  return cur;
}

double lp_norm_on_cylinder(const CarnotGroup& g, const GridFunction& u, const Cylinder& cyl, double p,
                           int required_margin) {
  double cell = u.spec().record_dt();
  for (int i = 0; i < u.spatial_dim(); ++i) cell *= u.spec().spacing(i);
  double sum = 0.0;
  bool any = false;
  for (int lev = 0; lev < u.levels(); ++lev) {
    double t = u.level_time(lev);
    if (std::fabs(t - cyl.center.t) >= cyl.radius * cyl.radius) continue;
    for (int f = 0; f < u.spatial_size(); ++f) {
      GroupPoint x(u.node_coords(f));
      if (gauge_distance(g, cyl.center.x, x) >= cyl.radius) continue;
      if (u.boundary_margin(f) < required_margin)
        throw std::out_of_range("cylinder touches the grid boundary margin");
      any = true;
      sum += std::pow(std::fabs(u.at(lev, f)), p) * cell;
    }
  }
  if (!any) throw std::out_of_range("no grid nodes inside the cylinder");
  return std::pow(sum, 1.0 / p);
}

double sobolev_norm(const CarnotGroup& g, const std::vector<PolyVectorField>& horizontal,
                    const GridFunction& u, double p, const Cylinder& cyl) {
  double total = 0.0;
  for (int order = 0; order <= 2; ++order) {
    std::vector<DerivativeMultiIndex> words;
    std::vector<int> word(order, 0);
    int m1 = g.horizontal_dim();
    while (true) {
      words.push_back({word, 0});
      int pos = order - 1;
      while (pos >= 0 && word[pos] == m1 - 1) word[pos--] = 0;
      if (pos < 0) break;
      ++word[pos];
    }
    for (const auto& w : words) {
      GridFunction der = apply_derivative_fd(g, horizontal, u, w);
      total += lp_norm_on_cylinder(g, der, cyl, p);
    }
  }
  GridFunction ut = apply_derivative_fd(g, horizontal, u, DerivativeMultiIndex{{}, 1});
  total += lp_norm_on_cylinder(g, u, cyl, p);
  total += lp_norm_on_cylinder(g, ut, cyl, p);
  return total;
}

}  // namespace carnot
