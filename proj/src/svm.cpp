#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include "ml_detail.hpp"

namespace rooftop {

double kernel_value(KernelKind k, double gamma, std::span<const double> a, std::span<const double> b) {
  switch (k) {
    case KernelKind::linear: return dot(a, b);
    case KernelKind::poly: {
      const double v = gamma * dot(a, b) + 1.0;
      return v * v * v;
    }
    case KernelKind::rbf: {
      double s = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
      return std::exp(-gamma * s);
    }
    case KernelKind::sigmoid: return std::tanh(gamma * dot(a, b) + 1.0);
  }
  return 0.0;
}

namespace {

constexpr double kTau = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

bool in_up(int y, double a, double C) { return (y > 0 && a < C) || (y < 0 && a > 0.0); }
bool in_low(int y, double a, double C) { return (y < 0 && a < C) || (y > 0 && a > 0.0); }

double compute_rho(std::span<const int> y, const std::vector<double>& alpha, const std::vector<double>& G, double C) {
  double ub = kInf, lb = -kInf, sum_free = 0.0;
  std::size_t free = 0;
  for (std::size_t t = 0; t < y.size(); ++t) {
    const double yG = y[t] * G[t];
    if (alpha[t] >= C) {
      if (y[t] < 0) ub = std::min(ub, yG);
      else lb = std::max(lb, yG);
    } else if (alpha[t] <= 0.0) {
      if (y[t] > 0) ub = std::min(ub, yG);
      else lb = std::max(lb, yG);
    } else {
      ++free;
      sum_free += yG;
    }
  }
  if (free > 0) return sum_free / static_cast<double>(free);
  if (std::isinf(ub)) return lb;
  if (std::isinf(lb)) return ub;
  return 0.5 * (ub + lb);
}

}  // namespace

SmoResult smo_solve(const Matrix& K, std::span<const int> y, double C, double tol, std::size_t max_iter) {
  const std::size_t n = y.size();
  SmoResult r;
  r.alpha.assign(n, 0.0);
  std::vector<double> G(n, -1.0);  // gradient of 0.5 a'Qa - e'a
  auto& alpha = r.alpha;
  auto Q = [&](std::size_t i, std::size_t j) { return y[i] * y[j] * K(i, j); };

  while (r.iterations < max_iter) {
    // second-order working set selection
    double m = -kInf;
    std::size_t i = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (in_up(y[t], alpha[t], C) && -y[t] * G[t] >= m) {
        m = -y[t] * G[t];
        i = t;
      }
    }
    double M = kInf, best = kInf;
    std::size_t j = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (!in_low(y[t], alpha[t], C)) continue;
      const double v = -y[t] * G[t];
      M = std::min(M, v);
      if (i == n) continue;
      const double b = m - v;
      if (b > 0.0) {
        double a = K(i, i) + K(t, t) - 2.0 * K(i, t);
        if (a <= 0.0) a = kTau;
        const double obj = -(b * b) / a;
        if (obj <= best) {
          best = obj;
          j = t;
        }
      }
    }
    if (i == n || j == n || m - M < tol) {
      r.converged = true;
      break;
    }
    ++r.iterations;

    const double old_i = alpha[i], old_j = alpha[j];
    if (y[i] != y[j]) {
      double quad = K(i, i) + K(j, j) + 2.0 * Q(i, j);
      if (quad <= 0.0) quad = kTau;
      const double delta = (-G[i] - G[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = -diff;
      }
      if (diff > 0.0) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = C - diff;
        }
      } else if (alpha[j] > C) {
        alpha[j] = C;
        alpha[i] = C + diff;
      }
    } else {
      double quad = K(i, i) + K(j, j) - 2.0 * Q(i, j);
      if (quad <= 0.0) quad = kTau;
      const double delta = (G[i] - G[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > C) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = sum - C;
        }
      } else if (alpha[j] < 0.0) {
        alpha[j] = 0.0;
        alpha[i] = sum;
      }
      if (sum > C) {
        if (alpha[j] > C) {
          alpha[j] = C;
          alpha[i] = sum - C;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = sum;
      }
    }
    const double di = alpha[i] - old_i, dj = alpha[j] - old_j;
    for (std::size_t t = 0; t < n; ++t) G[t] += Q(t, i) * di + Q(t, j) * dj;
  }
  r.rho = compute_rho(y, alpha, G, C);
  return r;
}

double max_kkt_violation(const Matrix& K, std::span<const int> y, const SmoResult& r, double C) {
  double worst = 0.0;
  for (std::size_t t = 0; t < y.size(); ++t) {
    double f = -r.rho;
    for (std::size_t s = 0; s < y.size(); ++s) f += r.alpha[s] * y[s] * K(s, t);
    const double margin = y[t] * f;
    const double a = r.alpha[t];
    double v = 0.0;
    if (a < 0.0 || a > C) v = kInf;
    else if (a == 0.0) v = std::max(0.0, 1.0 - margin);
    else if (a == C) v = std::max(0.0, margin - 1.0);
    else v = std::abs(margin - 1.0);
    worst = std::max(worst, v);
  }
  return worst;
}

std::pair<double, double> fit_platt(std::span<const double> dec, std::span<const int> y) {
  double prior1 = 0.0, prior0 = 0.0;
  for (int v : y) (v > 0 ? prior1 : prior0) += 1.0;
  const double hi = (prior1 + 1.0) / (prior1 + 2.0), lo = 1.0 / (prior0 + 2.0);
  std::vector<double> t(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) t[i] = y[i] > 0 ? hi : lo;
  auto objective = [&](double A, double B) {
    double f = 0.0;
    for (std::size_t i = 0; i < dec.size(); ++i) {
      const double fApB = dec[i] * A + B;
      f += fApB >= 0.0 ? t[i] * fApB + std::log1p(std::exp(-fApB)) : (t[i] - 1.0) * fApB + std::log1p(std::exp(fApB));
    }
    return f;
  };
  double A = 0.0, B = std::log((prior0 + 1.0) / (prior1 + 1.0));
  double fval = objective(A, B);
  for (int iter = 0; iter < 100; ++iter) {
    double h11 = 1e-12, h22 = 1e-12, h21 = 0.0, g1 = 0.0, g2 = 0.0;
    for (std::size_t i = 0; i < dec.size(); ++i) {
      const double fApB = dec[i] * A + B;
      double p, q;
      if (fApB >= 0.0) {
        const double e = std::exp(-fApB);
        p = e / (1.0 + e);
        q = 1.0 / (1.0 + e);
      } else {
        const double e = std::exp(fApB);
        p = 1.0 / (1.0 + e);
        q = e / (1.0 + e);
      }
      const double d2 = p * q;
      h11 += dec[i] * dec[i] * d2;
      h22 += d2;
      h21 += dec[i] * d2;
      const double d1 = t[i] - p;
      g1 += dec[i] * d1;
      g2 += d1;
    }
    if (std::abs(g1) < 1e-5 && std::abs(g2) < 1e-5) break;
    const double det = h11 * h22 - h21 * h21;
    const double dA = -(h22 * g1 - h21 * g2) / det;
    const double dB = -(-h21 * g1 + h11 * g2) / det;
    const double gd = g1 * dA + g2 * dB;
    double step = 1.0;
    while (step >= 1e-10) {
      const double nA = A + step * dA, nB = B + step * dB;
      const double nf = objective(nA, nB);
      if (nf < fval + 1e-4 * step * gd) {
        A = nA;
        B = nB;
        fval = nf;
        break;
      }
      step *= 0.5;
    }
    if (step < 1e-10) break;
  }
  return {A, B};
}

namespace detail {

SvmParams train_svm(const ClassifierSpec& spec, const Matrix& X, std::span<const int> y, std::size_t classes) {
  const std::size_t n = X.rows;
  Matrix K(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) K(i, j) = K(j, i) = kernel_value(spec.kernel, spec.gamma, X.row(i), X.row(j));
  }
  std::vector<SmoResult> runs(classes);
  std::vector<std::vector<int>> labels(classes, std::vector<int>(n));
  std::vector<char> used(n, 0);
  for (std::size_t c = 0; c < classes; ++c) {
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
      labels[c][i] = static_cast<std::size_t>(y[i]) == c ? 1 : -1;
      any = any || labels[c][i] > 0;
    }
    if (!any) continue;  // class absent from this training set
    runs[c] = smo_solve(K, labels[c], spec.C);
    for (std::size_t i = 0; i < n; ++i) used[i] = used[i] || runs[c].alpha[i] > 0.0;
  }
  std::vector<std::size_t> sv;
  for (std::size_t i = 0; i < n; ++i) {
    if (used[i]) sv.push_back(i);
  }
  SvmParams p;
  p.support = select_rows(X, sv);
  p.machines.resize(classes);
  for (std::size_t c = 0; c < classes; ++c) {
    BinarySvm& m = p.machines[c];
    m.coef.assign(sv.size(), 0.0);
    if (runs[c].alpha.empty()) {
      m.rho = 1.0;
      m.platt_a = 0.0;
      m.platt_b = 30.0;
      continue;
    }
    for (std::size_t s = 0; s < sv.size(); ++s) m.coef[s] = runs[c].alpha[sv[s]] * labels[c][sv[s]];
    m.rho = runs[c].rho;
    std::vector<double> dec(n, -m.rho);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t s = 0; s < sv.size(); ++s) dec[i] += m.coef[s] * K(sv[s], i);
    }
    std::tie(m.platt_a, m.platt_b) = fit_platt(dec, labels[c]);
  }
  return p;
}

Matrix svm_decision(const ClassifierSpec& spec, const SvmParams& p, const Matrix& X) {
  const std::size_t k = p.machines.size();
  Matrix out(X.rows, k);
  std::vector<double> kv(p.support.rows);
  for (std::size_t i = 0; i < X.rows; ++i) {
    for (std::size_t s = 0; s < p.support.rows; ++s) kv[s] = kernel_value(spec.kernel, spec.gamma, p.support.row(s), X.row(i));
    for (std::size_t c = 0; c < k; ++c) out(i, c) = dot(p.machines[c].coef, kv) - p.machines[c].rho;
  }
  return out;
}

Matrix svm_proba(const ClassifierSpec& spec, const SvmParams& p, const Matrix& X) {
  Matrix out = svm_decision(spec, p, X);
  const std::size_t k = p.machines.size();
  for (std::size_t i = 0; i < X.rows; ++i) {
    auto row = out.row(i);
    double sum = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      const double fApB = p.machines[c].platt_a * row[c] + p.machines[c].platt_b;
      row[c] = fApB >= 0.0 ? std::exp(-fApB) / (1.0 + std::exp(-fApB)) : 1.0 / (1.0 + std::exp(fApB));
      sum += row[c];
    }
    for (double& v : row) v = sum > 0.0 ? v / sum : 1.0 / static_cast<double>(k);
  }
  return out;
}

}  // namespace detail
}  // namespace rooftop
