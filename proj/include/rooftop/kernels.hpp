#pragma once

// Data-parallel inner loops. Each OpenMP kernel has a plain serial twin that
// is kept as the reference in tests and as the baseline in bench/.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace rooftop::kernels {

/// Interleaved floating-point image (height x width x channels).
struct ImageF {
  std::size_t width = 0, height = 0, channels = 0;
  std::vector<double> v;

  ImageF() = default;
  ImageF(std::size_t w, std::size_t h, std::size_t c, double fill = 0.0)
      : width(w), height(h), channels(c), v(w * h * c, fill) {}
  double& at(std::size_t x, std::size_t y, std::size_t c = 0) { return v[(y * width + x) * channels + c]; }
  double at(std::size_t x, std::size_t y, std::size_t c = 0) const { return v[(y * width + x) * channels + c]; }
};

/// cos(query, row_i) for every row of a row-major float matrix.
void cosine_scores(std::span<const float> matrix, std::size_t dim, std::span<const double> norms,
                   std::span<const float> query, double query_norm, std::span<double> out);
void cosine_scores_serial(std::span<const float> matrix, std::size_t dim, std::span<const double> norms,
                          std::span<const float> query, double query_norm, std::span<double> out);

/// Normalized 1-D Gaussian taps with radius ceil(3 sigma).
std::vector<double> gaussian_taps(double sigma);

/// Gaussian blur with clamp-to-edge borders. The parallel version runs two
/// separable passes; the serial reference convolves the full 2-D kernel.
ImageF gaussian_blur(const ImageF& src, double sigma);
ImageF gaussian_blur_serial(const ImageF& src, double sigma);

/// One output cell of an area-weighted resampling: source index and overlap.
struct Tap {
  std::size_t index;
  double weight;
};
/// For each of `out_len` output cells of width `factor` (in source units),
/// the overlapping source cells clipped to [0, in_len).
std::vector<std::vector<Tap>> area_taps(std::size_t in_len, std::size_t out_len, double factor);

/// Area-weighted mean downsampling of an 8-bit interleaved raster. Samples
/// equal to `nodata` on every band carry no weight; an output cell with no
/// valid coverage becomes nodata.
std::vector<std::uint8_t> area_downsample(std::span<const std::uint8_t> src, std::size_t width, std::size_t height,
                                          std::size_t bands, double factor, std::size_t out_w, std::size_t out_h,
                                          std::optional<std::uint8_t> nodata);
std::vector<std::uint8_t> area_downsample_serial(std::span<const std::uint8_t> src, std::size_t width,
                                                 std::size_t height, std::size_t bands, double factor,
                                                 std::size_t out_w, std::size_t out_h,
                                                 std::optional<std::uint8_t> nodata);

/// Bilinear resize with half-pixel centers (edge-clamped source coordinates).
ImageF bilinear_resize(const ImageF& src, std::size_t out_w, std::size_t out_h);
ImageF bilinear_resize_serial(const ImageF& src, std::size_t out_w, std::size_t out_h);

}  // namespace rooftop::kernels
