#include <algorithm>
#include <cmath>

#include "ml_detail.hpp"
#include "rooftop/optim.hpp"

namespace rooftop {

namespace {

constexpr std::size_t kMaxIter = 1000;
constexpr double kTol = 1e-6;

// Smooth part only (mean cross-entropy), used by the proximal solver.
double cross_entropy(const Matrix& X, std::span<const int> y, std::size_t k, std::span<const double> theta,
                     std::span<double> grad) {
  return logreg_objective(X, y, k, 0.0, theta, grad);
}

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

// FISTA with backtracking on the Lipschitz estimate. The bias block is not
// penalized.
std::vector<double> fit_l1(const Matrix& X, std::span<const int> y, std::size_t k, double lambda) {
  const std::size_t d = X.cols;
  const std::size_t nw = k * d;
  const std::size_t np = nw + k;
  std::vector<double> x(np, 0.0), z(x), xn(np), gz(np), gtmp(np);
  double L = 1.0, t = 1.0;
  auto prox = [&](const std::vector<double>& from, const std::vector<double>& g, double step,
                  std::vector<double>& out) {
    for (std::size_t i = 0; i < np; ++i) {
      const double v = from[i] - step * g[i];
      out[i] = i < nw ? soft_threshold(v, step * lambda) : v;
    }
  };
  for (std::size_t it = 0; it < kMaxIter; ++it) {
    const double fz = cross_entropy(X, y, k, z, gz);
    for (;;) {
      prox(z, gz, 1.0 / L, xn);
      double quad = fz;
      double sq = 0.0;
      for (std::size_t i = 0; i < np; ++i) {
        const double diff = xn[i] - z[i];
        quad += gz[i] * diff;
        sq += diff * diff;
      }
      quad += 0.5 * L * sq;
      if (cross_entropy(X, y, k, xn, gtmp) <= quad + 1e-12) break;
      L *= 2.0;
    }
    double step_norm = 0.0;
    for (std::size_t i = 0; i < np; ++i) step_norm = std::max(step_norm, std::abs(xn[i] - x[i]));
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    for (std::size_t i = 0; i < np; ++i) z[i] = xn[i] + ((t - 1.0) / tn) * (xn[i] - x[i]);
    x = xn;
    t = tn;
    if (step_norm < kTol) break;
  }
  return x;
}

}  // namespace

double logreg_objective(const Matrix& X, std::span<const int> y, std::size_t classes, double l2,
                        std::span<const double> theta, std::span<double> grad) {
  const std::size_t n = X.rows, d = X.cols, k = classes;
  const double* W = theta.data();
  const double* b = theta.data() + k * d;
  std::fill(grad.begin(), grad.end(), 0.0);
  double* gW = grad.data();
  double* gb = grad.data() + k * d;
  std::vector<double> z(k);
  double loss = 0.0;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto xi = X.row(i);
    for (std::size_t c = 0; c < k; ++c) z[c] = b[c] + dot({W + c * d, d}, xi);
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double& v : z) {
      v = std::exp(v - zmax);
      sum += v;
    }
    loss -= std::log(z[static_cast<std::size_t>(y[i])] / sum);
    for (std::size_t c = 0; c < k; ++c) {
      const double r = (z[c] / sum - (static_cast<std::size_t>(y[i]) == c ? 1.0 : 0.0)) * inv_n;
      gb[c] += r;
      double* gw = gW + c * d;
      for (std::size_t j = 0; j < d; ++j) gw[j] += r * xi[j];
    }
  }
  loss *= inv_n;
  if (l2 > 0.0) {
    double sq = 0.0;
    for (std::size_t i = 0; i < k * d; ++i) {
      sq += W[i] * W[i];
      gW[i] += l2 * W[i];
    }
    loss += 0.5 * l2 * sq;
  }
  return loss;
}

namespace detail {

LogRegParams train_logreg(const ClassifierSpec& spec, const Matrix& X, std::span<const int> y, std::size_t k) {
  const std::size_t d = X.cols;
  // sklearn-style C * sum(loss) + penalty, divided through by C * n
  const double reg = 1.0 / (spec.C * static_cast<double>(X.rows));
  std::vector<double> theta;
  if (spec.penalty == Penalty::l2) {
    theta.assign(k * d + k, 0.0);
    minimize_lbfgs([&](std::span<const double> t, std::span<double> g) { return logreg_objective(X, y, k, reg, t, g); },
                   theta, kMaxIter, kTol);
  } else {
    theta = fit_l1(X, y, k, reg);
  }
  LogRegParams p;
  p.weights = Matrix(k, d);
  std::copy(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(k * d), p.weights.data.begin());
  p.bias.assign(theta.begin() + static_cast<std::ptrdiff_t>(k * d), theta.end());
  return p;
}

void softmax(std::span<double> z) {
  const double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - zmax);
    sum += v;
  }
  for (double& v : z) v /= sum;
}

Matrix logreg_proba(const LogRegParams& p, const Matrix& X) {
  const std::size_t k = p.bias.size();
  Matrix out(X.rows, k);
  for (std::size_t i = 0; i < X.rows; ++i) {
    auto row = out.row(i);
    for (std::size_t c = 0; c < k; ++c) row[c] = p.bias[c] + dot(p.weights.row(c), X.row(i));
    softmax(row);
  }
  return out;
}

}  // namespace detail
}  // namespace rooftop
