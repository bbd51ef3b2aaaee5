#pragma once

#include <string>
#include <vector>

#include "rooftop/matrix.hpp"

namespace rooftop {

enum class ScalerKind { standard, minmax, robust };
std::string to_string(ScalerKind k);
ScalerKind scaler_kind_from(const std::string& s);

/// x' = (x - center) / spread per feature; zero-spread features map to 0.
///   standard: mean / population std
///   minmax:   min / (max - min)
///   robust:   median / (Q75 - Q25), linearly interpolated quantiles
struct FittedScaler {
  ScalerKind kind = ScalerKind::standard;
  std::vector<double> center;
  std::vector<double> spread;
};

FittedScaler fit_scaler(ScalerKind kind, const Matrix& X);
Matrix apply_scaler(const FittedScaler& s, const Matrix& X);

/// Quantile q in [0,1] of sorted values with linear interpolation between
/// order statistics at position q * (n - 1).
double interpolated_quantile(const std::vector<double>& sorted, double q);

}  // namespace rooftop
