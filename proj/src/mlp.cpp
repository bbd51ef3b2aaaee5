#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ml_detail.hpp"
#include "rooftop/optim.hpp"
#include "rooftop/rng.hpp"

namespace rooftop {

std::size_t MlpShape::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) n += sizes[l + 1] * (sizes[l] + 1);
  return n;
}

namespace {

constexpr std::size_t kMaxEpochs = 500;
constexpr std::size_t kPatience = 10;
constexpr std::size_t kBatch = 32;
constexpr double kStep = 1e-3;

double activate(Activation a, double v) { return a == Activation::relu ? std::max(0.0, v) : std::tanh(v); }
// derivative expressed through the activation output
double activate_grad(Activation a, double out) { return a == Activation::relu ? (out > 0.0 ? 1.0 : 0.0) : 1.0 - out * out; }

}  // namespace

double mlp_objective(const MlpShape& shape, const Matrix& X, std::span<const int> y, double alpha,
                     std::span<const double> theta, std::span<double> grad) {
  const std::size_t L = shape.sizes.size() - 1;
  const std::size_t n = X.rows;
  std::vector<std::size_t> offset(L);
  for (std::size_t l = 0, o = 0; l < L; ++l) {
    offset[l] = o;
    o += shape.sizes[l + 1] * (shape.sizes[l] + 1);
  }
  std::fill(grad.begin(), grad.end(), 0.0);
  std::vector<std::vector<double>> act(L + 1);
  std::vector<std::vector<double>> delta(L + 1);
  for (std::size_t l = 0; l <= L; ++l) {
    act[l].resize(shape.sizes[l]);
    delta[l].resize(shape.sizes[l]);
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(X.row(i).begin(), X.row(i).end(), act[0].begin());
    for (std::size_t l = 0; l < L; ++l) {
      const std::size_t in = shape.sizes[l], out = shape.sizes[l + 1];
      const double* W = theta.data() + offset[l];
      const double* b = W + out * in;
      for (std::size_t o = 0; o < out; ++o) {
        const double z = b[o] + dot({W + o * in, in}, act[l]);
        act[l + 1][o] = l + 1 == L ? z : activate(shape.activation, z);
      }
    }
    detail::softmax(act[L]);
    const auto yi = static_cast<std::size_t>(y[i]);
    loss -= std::log(std::max(act[L][yi], std::numeric_limits<double>::min()));
    for (std::size_t c = 0; c < shape.sizes[L]; ++c) delta[L][c] = (act[L][c] - (c == yi ? 1.0 : 0.0)) * inv_n;
    for (std::size_t l = L; l-- > 0;) {
      const std::size_t in = shape.sizes[l], out = shape.sizes[l + 1];
      const double* W = theta.data() + offset[l];
      double* gW = grad.data() + offset[l];
      double* gb = gW + out * in;
      for (std::size_t o = 0; o < out; ++o) {
        const double d = delta[l + 1][o];
        gb[o] += d;
        for (std::size_t j = 0; j < in; ++j) gW[o * in + j] += d * act[l][j];
      }
      if (l == 0) break;
      for (std::size_t j = 0; j < in; ++j) {
        double s = 0.0;
        for (std::size_t o = 0; o < out; ++o) s += W[o * in + j] * delta[l + 1][o];
        delta[l][j] = s * activate_grad(shape.activation, act[l][j]);
      }
    }
  }
  loss *= inv_n;
  if (alpha > 0.0) {
    double sq = 0.0;
    const double scale = alpha * inv_n;
    for (std::size_t l = 0; l < L; ++l) {
      const std::size_t nw = shape.sizes[l + 1] * shape.sizes[l];
      for (std::size_t w = 0; w < nw; ++w) {
        const double v = theta[offset[l] + w];
        sq += v * v;
        grad[offset[l] + w] += scale * v;
      }
    }
    loss += 0.5 * scale * sq;
  }
  return loss;
}

namespace detail {

namespace {

MlpParams unflatten(const MlpShape& shape, const std::vector<double>& theta) {
  MlpParams p;
  std::size_t o = 0;
  for (std::size_t l = 0; l + 1 < shape.sizes.size(); ++l) {
    const std::size_t in = shape.sizes[l], out = shape.sizes[l + 1];
    DenseLayer layer;
    layer.weights = Matrix(out, in);
    std::copy(theta.begin() + static_cast<std::ptrdiff_t>(o), theta.begin() + static_cast<std::ptrdiff_t>(o + out * in),
              layer.weights.data.begin());
    o += out * in;
    layer.bias.assign(theta.begin() + static_cast<std::ptrdiff_t>(o), theta.begin() + static_cast<std::ptrdiff_t>(o + out));
    o += out;
    p.layers.push_back(std::move(layer));
  }
  return p;
}

}  // namespace

MlpParams train_mlp(const ClassifierSpec& spec, const Matrix& X, std::span<const int> y, std::size_t classes,
                    std::uint64_t seed) {
  MlpShape shape;
  shape.activation = spec.activation;
  shape.sizes.push_back(X.cols);
  for (std::size_t h : spec.hidden) shape.sizes.push_back(h);
  shape.sizes.push_back(classes);

  Rng rng(seed);
  std::vector<double> theta(shape.parameter_count());
  {
    std::size_t o = 0;
    for (std::size_t l = 0; l + 1 < shape.sizes.size(); ++l) {
      const std::size_t in = shape.sizes[l], out = shape.sizes[l + 1];
      const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
      for (std::size_t w = 0; w < out * in + out; ++w) theta[o + w] = rng.uniform(-bound, bound);
      o += out * in + out;
    }
  }

  // 10% validation holdout drives early stopping
  std::vector<std::size_t> order(X.rows);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  const std::size_t n_val = X.rows >= 10 ? X.rows / 10 : 0;
  std::vector<std::size_t> val_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> fit_idx(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  const Matrix Xf = select_rows(X, fit_idx);
  std::vector<int> yf(fit_idx.size());
  for (std::size_t i = 0; i < fit_idx.size(); ++i) yf[i] = y[fit_idx[i]];
  Matrix Xv = Xf;
  std::vector<int> yv = yf;
  if (n_val > 0) {
    Xv = select_rows(X, val_idx);
    yv.resize(n_val);
    for (std::size_t i = 0; i < n_val; ++i) yv[i] = y[val_idx[i]];
  }
  std::vector<double> scratch(theta.size());
  auto val_loss = [&](const std::vector<double>& t) { return mlp_objective(shape, Xv, yv, 0.0, t, scratch); };

  std::vector<double> best = theta;
  double best_loss = val_loss(theta);
  std::size_t stale = 0;

  auto track = [&](const std::vector<double>& t) {
    const double v = val_loss(t);
    if (!std::isfinite(v)) return false;
    if (v < best_loss - 1e-10) {
      best_loss = v;
      best = t;
      stale = 0;
    } else if (++stale >= kPatience) {
      return false;
    }
    return true;
  };

  if (spec.solver == Solver::lbfgs) {
    Lbfgs opt([&](std::span<const double> t, std::span<double> g) { return mlp_objective(shape, Xf, yf, spec.alpha, t, g); },
              theta);
    for (std::size_t epoch = 0; epoch < kMaxEpochs; ++epoch) {
      if (!opt.step() || !track(opt.x())) break;
    }
    return unflatten(shape, best);
  }

  std::vector<double> grad(theta.size()), m(theta.size(), 0.0), v(theta.size(), 0.0);
  std::vector<std::size_t> batch_order(fit_idx.size());
  std::iota(batch_order.begin(), batch_order.end(), 0);
  std::size_t t_step = 0;
  for (std::size_t epoch = 0; epoch < kMaxEpochs; ++epoch) {
    rng.shuffle(batch_order);
    for (std::size_t start = 0; start < batch_order.size(); start += kBatch) {
      const std::size_t stop = std::min(batch_order.size(), start + kBatch);
      std::span<const std::size_t> idx(batch_order.data() + start, stop - start);
      const Matrix Xb = select_rows(Xf, idx);
      std::vector<int> yb(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) yb[i] = yf[idx[i]];
      mlp_objective(shape, Xb, yb, spec.alpha, theta, grad);
      ++t_step;
      if (spec.solver == Solver::sgd) {
        for (std::size_t p = 0; p < theta.size(); ++p) {
          m[p] = 0.9 * m[p] - kStep * grad[p];
          theta[p] += m[p];
        }
      } else {
        const double c1 = 1.0 - std::pow(0.9, static_cast<double>(t_step));
        const double c2 = 1.0 - std::pow(0.999, static_cast<double>(t_step));
        for (std::size_t p = 0; p < theta.size(); ++p) {
          m[p] = 0.9 * m[p] + 0.1 * grad[p];
          v[p] = 0.999 * v[p] + 0.001 * grad[p] * grad[p];
          theta[p] -= kStep * (m[p] / c1) / (std::sqrt(v[p] / c2) + 1e-8);
        }
      }
    }
    if (!track(theta)) break;
  }
  return unflatten(shape, best);
}

Matrix mlp_proba(const MlpParams& p, Activation act, const Matrix& X) {
  const std::size_t k = p.layers.back().bias.size();
  Matrix out(X.rows, k);
  std::vector<double> cur, next;
  for (std::size_t i = 0; i < X.rows; ++i) {
    cur.assign(X.row(i).begin(), X.row(i).end());
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
      const DenseLayer& layer = p.layers[l];
      next.resize(layer.bias.size());
      for (std::size_t o = 0; o < next.size(); ++o) {
        const double z = layer.bias[o] + dot(layer.weights.row(o), cur);
        next[o] = l + 1 == p.layers.size() ? z : activate(act, z);
      }
      cur.swap(next);
    }
    softmax(cur);
    std::copy(cur.begin(), cur.end(), out.row(i).begin());
  }
  return out;
}

}  // namespace detail
}  // namespace rooftop
