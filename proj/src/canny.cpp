#include "rooftop/canny.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rooftop/kernels.hpp"

namespace rooftop {

std::size_t EdgeMap::count() const { return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true)); }

namespace {

std::size_t clamp_to(std::ptrdiff_t v, std::size_t n) {
  return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(v, 0, static_cast<std::ptrdiff_t>(n) - 1));
}

}  // namespace

EdgeMap canny_edges(std::span<const std::uint8_t> rgb, std::size_t width, std::size_t height,
                    const CannyParams& params) {
  if (width < 5 || height < 5) throw std::invalid_argument("image too small for edge detection (min 5x5)");
  if (rgb.size() != width * height * 3) throw std::invalid_argument("RGB buffer does not match dimensions");
  if (!(params.low_frac > 0 && params.low_frac < params.high_frac && params.high_frac <= 1)) {
    throw std::invalid_argument("Canny thresholds must satisfy 0 < low < high <= 1");
  }
  const std::size_t n = width * height;

  // Integer luma (x1000) shifted so its minimum is zero: a uniform brightness
  // offset then yields bit-identical downstream arithmetic.
  std::vector<std::int64_t> luma(n);
  for (std::size_t i = 0; i < n; ++i) {
    luma[i] = 299 * rgb[3 * i] + 587 * rgb[3 * i + 1] + 114 * rgb[3 * i + 2];
  }
  const std::int64_t lmin = *std::min_element(luma.begin(), luma.end());
  kernels::ImageF gray(width, height, 1);
  for (std::size_t i = 0; i < n; ++i) gray.v[i] = static_cast<double>(luma[i] - lmin) / 1000.0;

  const kernels::ImageF blurred = kernels::gaussian_blur(gray, params.sigma);
  auto px = [&](std::ptrdiff_t x, std::ptrdiff_t y) { return blurred.at(clamp_to(x, width), clamp_to(y, height)); };

  std::vector<double> mag(n);
  std::vector<std::uint8_t> dir(n);  // 0: horizontal gradient, 1: 45deg, 2: vertical, 3: 135deg
  double gmax = 0.0;
#pragma omp parallel for schedule(static) reduction(max : gmax)
  for (std::ptrdiff_t y = 0; y < static_cast<std::ptrdiff_t>(height); ++y) {
    for (std::ptrdiff_t x = 0; x < static_cast<std::ptrdiff_t>(width); ++x) {
      const double gx = (px(x + 1, y - 1) + 2 * px(x + 1, y) + px(x + 1, y + 1)) -
                        (px(x - 1, y - 1) + 2 * px(x - 1, y) + px(x - 1, y + 1));
      const double gy = (px(x - 1, y + 1) + 2 * px(x, y + 1) + px(x + 1, y + 1)) -
                        (px(x - 1, y - 1) + 2 * px(x, y - 1) + px(x + 1, y - 1));
      const auto i = static_cast<std::size_t>(y) * width + static_cast<std::size_t>(x);
      mag[i] = std::hypot(gx, gy);
      double angle = std::atan2(gy, gx) * 180.0 / M_PI;
      if (angle < 0) angle += 180.0;
      if (angle < 22.5 || angle >= 157.5) dir[i] = 0;
      else if (angle < 67.5) dir[i] = 1;
      else if (angle < 112.5) dir[i] = 2;
      else dir[i] = 3;
      gmax = std::max(gmax, mag[i]);
    }
  }

  EdgeMap e{width, height, std::vector<bool>(n, false), params};
  if (gmax <= 0.0) return e;
  const double high = params.high_frac * gmax, low = params.low_frac * gmax;

  static constexpr int kDx[4] = {1, 1, 0, -1};
  static constexpr int kDy[4] = {0, 1, 1, 1};
  auto mag_at = [&](std::ptrdiff_t x, std::ptrdiff_t y) -> double {
    if (x < 0 || y < 0 || x >= static_cast<std::ptrdiff_t>(width) || y >= static_cast<std::ptrdiff_t>(height)) {
      return 0.0;
    }
    return mag[static_cast<std::size_t>(y) * width + static_cast<std::size_t>(x)];
  };

  // 0 = suppressed, 1 = weak, 2 = strong
  std::vector<std::uint8_t> cls(n, 0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t y = 0; y < static_cast<std::ptrdiff_t>(height); ++y) {
    for (std::ptrdiff_t x = 0; x < static_cast<std::ptrdiff_t>(width); ++x) {
      const auto i = static_cast<std::size_t>(y) * width + static_cast<std::size_t>(x);
      const double m = mag[i];
      if (m < low || m <= 0.0) continue;
      const int d = dir[i];
      const double ahead = mag_at(x + kDx[d], y + kDy[d]);
      const double behind = mag_at(x - kDx[d], y - kDy[d]);
      // asymmetric comparison so a plateau of two equal maxima keeps one pixel
      if (m > behind && m >= ahead) cls[i] = m >= high ? 2 : 1;
    }
  }

  std::vector<std::size_t> stack;
  for (std::size_t i = 0; i < n; ++i) {
    if (cls[i] == 2) {
      e.mask[i] = true;
      stack.push_back(i);
    }
  }
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    const auto x = static_cast<std::ptrdiff_t>(i % width), y = static_cast<std::ptrdiff_t>(i / width);
    for (std::ptrdiff_t dy = -1; dy <= 1; ++dy) {
      for (std::ptrdiff_t dx = -1; dx <= 1; ++dx) {
        const std::ptrdiff_t nx = x + dx, ny = y + dy;
        if (nx < 0 || ny < 0 || nx >= static_cast<std::ptrdiff_t>(width) || ny >= static_cast<std::ptrdiff_t>(height)) {
          continue;
        }
        const auto j = static_cast<std::size_t>(ny) * width + static_cast<std::size_t>(nx);
        if (cls[j] == 1 && !e.mask[j]) {
          e.mask[j] = true;
          stack.push_back(j);
        }
      }
    }
  }
  return e;
}

double edge_density(const EdgeMap& e) {
  if (e.mask.empty()) return 0.0;
  return static_cast<double>(e.count()) / static_cast<double>(e.mask.size());
}

double chip_edge_density(const ImageChip& chip, const CannyParams& params) {
  chip.validate();
  std::size_t x0 = chip.width, y0 = chip.height, x1 = 0, y1 = 0, valid = 0;
  for (std::size_t y = 0; y < chip.height; ++y) {
    for (std::size_t x = 0; x < chip.width; ++x) {
      if (chip.pad_mask[y * chip.width + x]) continue;
      ++valid;
      x0 = std::min(x0, x);
      y0 = std::min(y0, y);
      x1 = std::max(x1, x);
      y1 = std::max(y1, y);
    }
  }
  if (valid == 0) throw std::invalid_argument("chip " + chip.building_id + " is fully padded");

  std::vector<std::uint8_t> filled = chip.pixels;
  for (std::size_t y = 0; y < chip.height; ++y) {
    for (std::size_t x = 0; x < chip.width; ++x) {
      if (!chip.pad_mask[y * chip.width + x]) continue;
      const std::size_t sx = std::clamp(x, x0, x1), sy = std::clamp(y, y0, y1);
      std::copy_n(&chip.pixels[(sy * chip.width + sx) * 3], 3, &filled[(y * chip.width + x) * 3]);
    }
  }
  const EdgeMap e = canny_edges(filled, chip.width, chip.height, params);
  std::size_t edges = 0;
  for (std::size_t i = 0; i < e.mask.size(); ++i) {
    if (e.mask[i] && !chip.pad_mask[i]) ++edges;
  }
  return static_cast<double>(edges) / static_cast<double>(valid);
}

ImageChip flag_obscured(ImageChip chip, double threshold, const CannyParams& params) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw std::invalid_argument("threshold must lie in [0, 1]");
  const double density = chip_edge_density(chip, params);
  chip.quality_flag = density < threshold ? QualityFlag::obscured : QualityFlag::ok;
  return chip;
}

}  // namespace rooftop
