#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rooftop/chip.hpp"

namespace rooftop {

struct CannyParams {
  double sigma = 1.4;
  double low_frac = 0.1;
  double high_frac = 0.3;
};

constexpr double kObscuredThreshold = 0.005;

struct EdgeMap {
  std::size_t width = 0, height = 0;
  std::vector<bool> mask;
  CannyParams params;

  std::size_t count() const;
};

/// Canny edges of an interleaved RGB image: luma, Gaussian blur, Sobel,
/// 4-direction non-maximum suppression, thresholds relative to the gradient
/// maximum, and 8-connected hysteresis.
EdgeMap canny_edges(std::span<const std::uint8_t> rgb, std::size_t width, std::size_t height,
                    const CannyParams& params = {});

double edge_density(const EdgeMap& e);

/// Sets quality_flag to obscured when the edge density over non-padded
/// pixels falls below `threshold`. Padding is replaced by the nearest valid
/// pixel before edge detection so the crop border does not register as edges.
ImageChip flag_obscured(ImageChip chip, double threshold = kObscuredThreshold, const CannyParams& params = {});

/// Measured density used by flag_obscured.
double chip_edge_density(const ImageChip& chip, const CannyParams& params = {});

}  // namespace rooftop
