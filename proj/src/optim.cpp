#include "rooftop/optim.hpp"

#include <algorithm>
#include <cmath>

namespace rooftop {

namespace {

double dotv(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

Lbfgs::Lbfgs(Objective f, std::vector<double> x0, std::size_t memory)
    : f_(std::move(f)), x_(std::move(x0)), g_(x_.size()), memory_(memory) {
  fx_ = f_(x_, g_);
}

double Lbfgs::grad_inf_norm() const {
  double m = 0.0;
  for (double v : g_) m = std::max(m, std::abs(v));
  return m;
}

bool Lbfgs::step() {
  const std::size_t n = x_.size();
  // two-loop recursion for d = -H g
  std::vector<double> d(g_);
  std::vector<double> alpha(s_.size());
  for (std::size_t k = s_.size(); k-- > 0;) {
    alpha[k] = rho_[k] * dotv(s_[k], d);
    for (std::size_t i = 0; i < n; ++i) d[i] -= alpha[k] * y_[k][i];
  }
  if (!s_.empty()) {
    const double gamma = dotv(s_.back(), y_.back()) / dotv(y_.back(), y_.back());
    for (double& v : d) v *= gamma;
  }
  for (std::size_t k = 0; k < s_.size(); ++k) {
    const double beta = rho_[k] * dotv(y_[k], d);
    for (std::size_t i = 0; i < n; ++i) d[i] += (alpha[k] - beta) * s_[k][i];
  }
  for (double& v : d) v = -v;

  double slope = dotv(g_, d);
  if (!(slope < 0.0)) {
    s_.clear();
    y_.clear();
    rho_.clear();
    for (std::size_t i = 0; i < n; ++i) d[i] = -g_[i];
    slope = dotv(g_, d);
    if (slope == 0.0) return false;
  }

  double t = 1.0;
  if (s_.empty()) {
    double gnorm = 0.0;
    for (double v : g_) gnorm += std::abs(v);
    t = std::min(1.0, 1.0 / std::max(gnorm, 1e-12));
  }
  std::vector<double> xn(n), gn(n);
  double fn = 0.0;
  bool accepted = false;
  for (int tries = 0; tries < 50; ++tries) {
    for (std::size_t i = 0; i < n; ++i) xn[i] = x_[i] + t * d[i];
    fn = f_(xn, gn);
    if (std::isfinite(fn) && fn <= fx_ + 1e-4 * t * slope) {
      accepted = true;
      break;
    }
    t *= 0.5;
  }
  if (!accepted) return false;

  std::vector<double> s(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = xn[i] - x_[i];
    y[i] = gn[i] - g_[i];
  }
  const double sy = dotv(s, y);
  if (sy > 1e-12 * std::sqrt(dotv(s, s) * dotv(y, y))) {
    s_.push_back(std::move(s));
    y_.push_back(std::move(y));
    rho_.push_back(1.0 / sy);
    if (s_.size() > memory_) {
      s_.pop_front();
      y_.pop_front();
      rho_.pop_front();
    }
  }
  x_ = std::move(xn);
  g_ = std::move(gn);
  fx_ = fn;
  ++iter_;
  return true;
}

MinimizeResult minimize_lbfgs(const Objective& f, std::vector<double>& x, std::size_t max_iter, double grad_tol,
                              std::size_t memory) {
  Lbfgs opt(f, x, memory);
  MinimizeResult r;
  while (r.iterations < max_iter && opt.grad_inf_norm() >= grad_tol) {
    if (!opt.step()) break;
    ++r.iterations;
  }
  r.converged = opt.grad_inf_norm() < grad_tol;
  r.value = opt.value();
  x = opt.x();
  return r;
}

}  // namespace rooftop
