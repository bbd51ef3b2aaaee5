#include "rooftop/scaler.hpp"

#include <algorithm>
#include <cmath>

namespace rooftop {

std::string to_string(ScalerKind k) {
  switch (k) {
    case ScalerKind::standard: return "standard";
    case ScalerKind::minmax: return "minmax";
    case ScalerKind::robust: return "robust";
  }
  return "?";
}

ScalerKind scaler_kind_from(const std::string& s) {
  if (s == "standard") return ScalerKind::standard;
  if (s == "minmax") return ScalerKind::minmax;
  if (s == "robust") return ScalerKind::robust;
  throw std::invalid_argument("unknown scaler '" + s + "'");
}

double interpolated_quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty data");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

FittedScaler fit_scaler(ScalerKind kind, const Matrix& X) {
  if (X.rows == 0 || X.cols == 0) throw std::invalid_argument("cannot fit a scaler on empty data");
  FittedScaler s{kind, std::vector<double>(X.cols), std::vector<double>(X.cols)};
  std::vector<double> col(X.rows);
  for (std::size_t j = 0; j < X.cols; ++j) {
    for (std::size_t i = 0; i < X.rows; ++i) col[i] = X(i, j);
    switch (kind) {
      case ScalerKind::standard: {
        double mean = 0.0;
        for (double v : col) mean += v;
        mean /= static_cast<double>(X.rows);
        double var = 0.0;
        for (double v : col) var += (v - mean) * (v - mean);
        s.center[j] = mean;
        s.spread[j] = std::sqrt(var / static_cast<double>(X.rows));
        break;
      }
      case ScalerKind::minmax: {
        const auto [mn, mx] = std::minmax_element(col.begin(), col.end());
        s.center[j] = *mn;
        s.spread[j] = *mx - *mn;
        break;
      }
      case ScalerKind::robust: {
        std::sort(col.begin(), col.end());
        s.center[j] = interpolated_quantile(col, 0.5);
        s.spread[j] = interpolated_quantile(col, 0.75) - interpolated_quantile(col, 0.25);
        break;
      }
    }
    // rounding noise on a constant column counts as zero spread
    if (s.spread[j] <= 1e-12 * std::max(1.0, std::abs(s.center[j]))) s.spread[j] = 0.0;
  }
  return s;
}

Matrix apply_scaler(const FittedScaler& s, const Matrix& X) {
  if (X.cols != s.center.size()) throw std::invalid_argument("scaler feature count mismatch");
  Matrix out(X.rows, X.cols);
  for (std::size_t i = 0; i < X.rows; ++i) {
    for (std::size_t j = 0; j < X.cols; ++j) {
      out(i, j) = s.spread[j] == 0.0 ? 0.0 : (X(i, j) - s.center[j]) / s.spread[j];
    }
  }
  return out;
}

}  // namespace rooftop
