#include "carnot/smooth.hpp"

#include <cmath>

namespace carnot {

namespace {

class PolynomialSmooth : public SmoothFunction {
 public:
  PolynomialSmooth(const CarnotGroup& g, const RatPoly& p) : n_(g.dim()) {
    value_ = to_double_poly(p);
    grad_.reserve(n_);
    for (int i = 0; i < n_; ++i) grad_.push_back(to_double_poly(p.derivative(i)));
    hess_.assign(n_, {});
    for (int i = 0; i < n_; ++i) {
      hess_[i].reserve(n_);
      for (int j = 0; j < n_; ++j) hess_[i].push_back(to_double_poly(p.derivative(i).derivative(j)));
    }
    dt_ = to_double_poly(p.dt());
  }
  double value(const SpaceTimePoint& p) const override { return value_.eval(p.x.coords, p.t); }
  Eigen::VectorXd gradient(const SpaceTimePoint& p) const override {
    Eigen::VectorXd g(n_);
    for (int i = 0; i < n_; ++i) g(i) = grad_[i].eval(p.x.coords, p.t);
    return g;
  }
  Eigen::MatrixXd hessian(const SpaceTimePoint& p) const override {
    Eigen::MatrixXd h(n_, n_);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) h(i, j) = hess_[i][j].eval(p.x.coords, p.t);
    return h;
  }
  double dt(const SpaceTimePoint& p) const override { return dt_.eval(p.x.coords, p.t); }

 private:
  int n_;
  Polynomial<double> value_, dt_;
  std::vector<Polynomial<double>> grad_;
  std::vector<std::vector<Polynomial<double>>> hess_;
};

// w = G(x) + t^j (or G^2 + t^2 for step 1), value = w^gamma.
class GaugePowerSmooth : public SmoothFunction {
 public:
  GaugePowerSmooth(const CarnotGroup& g, double beta) : n_(g.dim()) {
    int r = g.step();
    double e = 2.0;
    for (int i = 2; i <= r; ++i) e *= i;  // E = 2 r!
    RatPoly gauge(n_);
    for (int m = 0; m < n_; ++m) {
      Monomial mono(n_);
      mono.sx[m] = static_cast<int>(e) / g.weight(m);
      gauge.add_term(mono, Rational(1));
    }
    if (r >= 2) {
      inner_ = gauge;
      time_exp_ = static_cast<int>(e) / 2;
      gamma_ = beta / e;
    } else {
      inner_ = gauge * gauge;
      time_exp_ = 2;
      gamma_ = beta / 4.0;
    }
    Monomial tmono(n_);
    tmono.st = time_exp_;
    inner_.add_term(tmono, Rational(1));
    w_ = to_double_poly(inner_);
    for (int i = 0; i < n_; ++i) wg_.push_back(to_double_poly(inner_.derivative(i)));
    for (int i = 0; i < n_; ++i) {
      wh_.emplace_back();
      for (int j = 0; j < n_; ++j) wh_[i].push_back(to_double_poly(inner_.derivative(i).derivative(j)));
    }
    wt_ = to_double_poly(inner_.dt());
  }

  double value(const SpaceTimePoint& p) const override {
    double w = w_.eval(p.x.coords, p.t);
    return w > 0.0 ? std::pow(w, gamma_) : 0.0;
  }
  Eigen::VectorXd gradient(const SpaceTimePoint& p) const override {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n_);
    double w = w_.eval(p.x.coords, p.t);
    if (w <= 0.0) return g;
    double f1 = gamma_ * std::pow(w, gamma_ - 1.0);
    for (int i = 0; i < n_; ++i) g(i) = f1 * wg_[i].eval(p.x.coords, p.t);
    return g;
  }
  Eigen::MatrixXd hessian(const SpaceTimePoint& p) const override {
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n_, n_);
    double w = w_.eval(p.x.coords, p.t);
    if (w <= 0.0) return h;
    double f1 = gamma_ * std::pow(w, gamma_ - 1.0);
    double f2 = gamma_ * (gamma_ - 1.0) * std::pow(w, gamma_ - 2.0);
    for (int i = 0; i < n_; ++i) {
      double wi = wg_[i].eval(p.x.coords, p.t);
      for (int j = 0; j < n_; ++j) {
        double wj = wg_[j].eval(p.x.coords, p.t);
        h(i, j) = f2 * wi * wj + f1 * wh_[i][j].eval(p.x.coords, p.t);
      }
    }
    return h;
  }
  double dt(const SpaceTimePoint& p) const override {
    double w = w_.eval(p.x.coords, p.t);
    if (w <= 0.0) return 0.0;
    return gamma_ * std::pow(w, gamma_ - 1.0) * wt_.eval(p.x.coords, p.t);
  }

 private:
  int n_;
  double gamma_ = 0.0;
  int time_exp_ = 2;
  RatPoly inner_{0};
  Polynomial<double> w_, wt_;
  std::vector<Polynomial<double>> wg_;
  std::vector<std::vector<Polynomial<double>>> wh_;
};

class SumSmooth : public SmoothFunction {
 public:
  explicit SumSmooth(std::vector<std::pair<double, SmoothPtr>> terms) : terms_(std::move(terms)) {}
  double value(const SpaceTimePoint& p) const override {
    double v = 0;
    for (const auto& [c, f] : terms_) v += c * f->value(p);
    return v;
  }
  Eigen::VectorXd gradient(const SpaceTimePoint& p) const override {
    Eigen::VectorXd g = terms_.front().first * terms_.front().second->gradient(p);
    for (std::size_t i = 1; i < terms_.size(); ++i) g += terms_[i].first * terms_[i].second->gradient(p);
    return g;
  }
  Eigen::MatrixXd hessian(const SpaceTimePoint& p) const override {
    Eigen::MatrixXd h = terms_.front().first * terms_.front().second->hessian(p);
    for (std::size_t i = 1; i < terms_.size(); ++i) h += terms_[i].first * terms_[i].second->hessian(p);
    return h;
  }
  double dt(const SpaceTimePoint& p) const override {
    double v = 0;
    for (const auto& [c, f] : terms_) v += c * f->dt(p);
    return v;
  }

 private:
  std::vector<std::pair<double, SmoothPtr>> terms_;
};

class ExpLinearSmooth : public SmoothFunction {
 public:
  ExpLinearSmooth(const CarnotGroup& g, std::vector<double> c) : n_(g.dim()), c_(std::move(c)) {
    c_.resize(n_, 0.0);
  }
  double value(const SpaceTimePoint& p) const override {
    double s = 0;
    for (int i = 0; i < n_; ++i) s += c_[i] * p.x[i];
    return std::exp(s);
  }
  Eigen::VectorXd gradient(const SpaceTimePoint& p) const override {
    double v = value(p);
    Eigen::VectorXd g(n_);
    for (int i = 0; i < n_; ++i) g(i) = c_[i] * v;
    return g;
  }
  Eigen::MatrixXd hessian(const SpaceTimePoint& p) const override {
    double v = value(p);
    Eigen::MatrixXd h(n_, n_);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) h(i, j) = c_[i] * c_[j] * v;
    return h;
  }
  double dt(const SpaceTimePoint&) const override { return 0.0; }

 private:
  int n_;
  std::vector<double> c_;
};

}  // namespace

SmoothPtr smooth_polynomial(const CarnotGroup& g, const RatPoly& p) {
  return std::make_shared<PolynomialSmooth>(g, p);
}

SmoothPtr smooth_gauge_power(const CarnotGroup& g, double beta) {
  return std::make_shared<GaugePowerSmooth>(g, beta);
}

SmoothPtr smooth_sum(const std::vector<std::pair<double, SmoothPtr>>& terms) {
  return std::make_shared<SumSmooth>(terms);
}

SmoothPtr smooth_exp_linear(const CarnotGroup& g, const std::vector<double>& horizontal_coeffs) {
  return std::make_shared<ExpLinearSmooth>(g, horizontal_coeffs);
}

HorizontalOps::HorizontalOps(const CarnotGroup& g, const std::vector<PolyVectorField>& horizontal)
    : group_(&g), m1_(g.horizontal_dim()) {
  b_.resize(m1_);
  for (int i = 0; i < m1_; ++i) {
    b_[i].reserve(g.dim());
    for (int m = 0; m < g.dim(); ++m) b_[i].push_back(to_double_poly(horizontal[i].coeffs[m]));
  }
  xib_.assign(m1_, std::vector<std::vector<Polynomial<double>>>(m1_));
  for (int i = 0; i < m1_; ++i)
    for (int j = 0; j < m1_; ++j) {
      xib_[i][j].reserve(g.dim());
      for (int m = 0; m < g.dim(); ++m)
        xib_[i][j].push_back(to_double_poly(horizontal[i].apply(horizontal[j].coeffs[m])));
    }
}

double HorizontalOps::xi(const SmoothFunction& u, int i, const SpaceTimePoint& p) const {
  Eigen::VectorXd grad = u.gradient(p);
  double acc = 0.0;
  for (int m = 0; m < group_->dim(); ++m) {
    if (b_[i][m].empty()) continue;
    acc += b_[i][m].eval(p.x.coords, p.t) * grad(m);
  }
  return acc;
}

double HorizontalOps::xixj(const SmoothFunction& u, int i, int j, const SpaceTimePoint& p) const {
  Eigen::VectorXd grad = u.gradient(p);
  Eigen::MatrixXd hess = u.hessian(p);
  int n = group_->dim();
  double acc = 0.0;
  for (int m = 0; m < n; ++m) {
    double bim = b_[i][m].empty() ? 0.0 : b_[i][m].eval(p.x.coords, p.t);
    if (bim != 0.0)
      for (int k = 0; k < n; ++k) {
        double bjk = b_[j][k].empty() ? 0.0 : b_[j][k].eval(p.x.coords, p.t);
        if (bjk != 0.0) acc += bim * bjk * hess(m, k);
      }
    if (!xib_[i][j][m].empty()) acc += xib_[i][j][m].eval(p.x.coords, p.t) * grad(m);
  }
  return acc;
}

Eigen::MatrixXd HorizontalOps::second_matrix(const SmoothFunction& u, const SpaceTimePoint& p) const {
  Eigen::VectorXd grad = u.gradient(p);
  Eigen::MatrixXd hess = u.hessian(p);
  int n = group_->dim();
  Eigen::VectorXd bv(n);
  Eigen::MatrixXd out(m1_, m1_);
  std::vector<Eigen::VectorXd> bvals(m1_, Eigen::VectorXd(n));
  for (int i = 0; i < m1_; ++i)
    for (int m = 0; m < n; ++m)
      bvals[i](m) = b_[i][m].empty() ? 0.0 : b_[i][m].eval(p.x.coords, p.t);
  for (int i = 0; i < m1_; ++i)
    for (int j = 0; j < m1_; ++j) {
      double acc = bvals[i].transpose() * hess * bvals[j];
      for (int m = 0; m < n; ++m)
        if (!xib_[i][j][m].empty()) acc += xib_[i][j][m].eval(p.x.coords, p.t) * grad(m);
      out(i, j) = acc;
    }
  return out;
}

}  // namespace carnot
