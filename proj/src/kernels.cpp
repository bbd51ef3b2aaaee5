#include "rooftop/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rooftop::kernels {

namespace {

double dot_norm(const float* row, std::span<const float> query, std::size_t dim) {
  double s = 0.0;
  for (std::size_t d = 0; d < dim; ++d) s += static_cast<double>(row[d]) * static_cast<double>(query[d]);
  return s;
}

double clamp_unit(double v) { return std::clamp(v, -1.0, 1.0); }

std::size_t clamp_index(std::ptrdiff_t i, std::size_t n) {
  return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(n) - 1));
}

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

bool all_nodata(const std::uint8_t* p, std::size_t bands, std::optional<std::uint8_t> nodata) {
  if (!nodata) return false;
  for (std::size_t b = 0; b < bands; ++b) {
    if (p[b] != *nodata) return false;
  }
  return true;
}

struct LinearTap {
  std::size_t i0, i1;
  double frac;
};

LinearTap linear_tap(std::size_t dst, std::size_t in_len, std::size_t out_len) {
  double s = (static_cast<double>(dst) + 0.5) * static_cast<double>(in_len) / static_cast<double>(out_len) - 0.5;
  s = std::clamp(s, 0.0, static_cast<double>(in_len - 1));
  const auto i0 = static_cast<std::size_t>(std::floor(s));
  const std::size_t i1 = std::min(i0 + 1, in_len - 1);
  return {i0, i1, s - static_cast<double>(i0)};
}

}  // namespace

void cosine_scores(std::span<const float> matrix, std::size_t dim, std::span<const double> norms,
                   std::span<const float> query, double query_norm, std::span<double> out) {
  const auto rows = static_cast<std::ptrdiff_t>(norms.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    const auto r = static_cast<std::size_t>(i);
    out[r] = clamp_unit(dot_norm(matrix.data() + r * dim, query, dim) / (norms[r] * query_norm));
  }
}

void cosine_scores_serial(std::span<const float> matrix, std::size_t dim, std::span<const double> norms,
                          std::span<const float> query, double query_norm, std::span<double> out) {
  for (std::size_t r = 0; r < norms.size(); ++r) {
    out[r] = clamp_unit(dot_norm(matrix.data() + r * dim, query, dim) / (norms[r] * query_norm));
  }
}

std::vector<double> gaussian_taps(double sigma) {
  if (!(sigma > 0)) throw std::invalid_argument("gaussian sigma must be positive");
  const auto radius = static_cast<std::size_t>(std::ceil(3.0 * sigma));
  std::vector<double> taps(2 * radius + 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < taps.size(); ++i) {
    const double x = static_cast<double>(i) - static_cast<double>(radius);
    taps[i] = std::exp(-x * x / (2.0 * sigma * sigma));
    sum += taps[i];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

ImageF gaussian_blur(const ImageF& src, double sigma) {
  const auto taps = gaussian_taps(sigma);
  const auto radius = static_cast<std::ptrdiff_t>(taps.size() / 2);
  const std::size_t w = src.width, h = src.height, c = src.channels;
  ImageF tmp(w, h, c), out(w, h, c);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t yy = 0; yy < static_cast<std::ptrdiff_t>(h); ++yy) {
    const auto y = static_cast<std::size_t>(yy);
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        double s = 0.0;
        for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
          s += taps[static_cast<std::size_t>(k + radius)] *
               src.at(clamp_index(static_cast<std::ptrdiff_t>(x) + k, w), y, ch);
        }
        tmp.at(x, y, ch) = s;
      }
    }
  }
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t yy = 0; yy < static_cast<std::ptrdiff_t>(h); ++yy) {
    const auto y = static_cast<std::size_t>(yy);
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        double s = 0.0;
        for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
          s += taps[static_cast<std::size_t>(k + radius)] *
               tmp.at(x, clamp_index(yy + k, h), ch);
        }
        out.at(x, y, ch) = s;
      }
    }
  }
  return out;
}

ImageF gaussian_blur_serial(const ImageF& src, double sigma) {
  const auto taps = gaussian_taps(sigma);
  const auto radius = static_cast<std::ptrdiff_t>(taps.size() / 2);
  ImageF out(src.width, src.height, src.channels);
  for (std::size_t y = 0; y < src.height; ++y) {
    for (std::size_t x = 0; x < src.width; ++x) {
      for (std::size_t ch = 0; ch < src.channels; ++ch) {
        double s = 0.0;
        for (std::ptrdiff_t dy = -radius; dy <= radius; ++dy) {
          for (std::ptrdiff_t dx = -radius; dx <= radius; ++dx) {
            const std::size_t sx = clamp_index(static_cast<std::ptrdiff_t>(x) + dx, src.width);
            const std::size_t sy = clamp_index(static_cast<std::ptrdiff_t>(y) + dy, src.height);
            s += taps[static_cast<std::size_t>(dx + radius)] * taps[static_cast<std::size_t>(dy + radius)] *
                 src.at(sx, sy, ch);
          }
        }
        out.at(x, y, ch) = s;
      }
    }
  }
  return out;
}

std::vector<std::vector<Tap>> area_taps(std::size_t in_len, std::size_t out_len, double factor) {
  std::vector<std::vector<Tap>> taps(out_len);
  for (std::size_t i = 0; i < out_len; ++i) {
    const double lo = static_cast<double>(i) * factor;
    const double hi = std::min(static_cast<double>(i + 1) * factor, static_cast<double>(in_len));
    const auto first = static_cast<std::size_t>(std::floor(lo));
    for (std::size_t j = first; j < in_len && static_cast<double>(j) < hi; ++j) {
      const double overlap = std::min(static_cast<double>(j + 1), hi) - std::max(static_cast<double>(j), lo);
      if (overlap > 1e-12) taps[i].push_back({j, overlap});
    }
  }
  return taps;
}

std::vector<std::uint8_t> area_downsample(std::span<const std::uint8_t> src, std::size_t width, std::size_t height,
                                          std::size_t bands, double factor, std::size_t out_w, std::size_t out_h,
                                          std::optional<std::uint8_t> nodata) {
  const auto col_taps = area_taps(width, out_w, factor);
  const auto row_taps = area_taps(height, out_h, factor);
  std::vector<std::uint8_t> out(out_w * out_h * bands);

#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t oy = 0; oy < static_cast<std::ptrdiff_t>(out_h); ++oy) {
    std::vector<double> acc(bands);
    for (std::size_t ox = 0; ox < out_w; ++ox) {
      std::fill(acc.begin(), acc.end(), 0.0);
      double wsum = 0.0;
      for (const Tap& ry : row_taps[static_cast<std::size_t>(oy)]) {
        for (const Tap& rx : col_taps[ox]) {
          const std::uint8_t* p = src.data() + (ry.index * width + rx.index) * bands;
          if (all_nodata(p, bands, nodata)) continue;
          const double wgt = ry.weight * rx.weight;
          wsum += wgt;
          for (std::size_t b = 0; b < bands; ++b) acc[b] += wgt * p[b];
        }
      }
      std::uint8_t* o = out.data() + (static_cast<std::size_t>(oy) * out_w + ox) * bands;
      for (std::size_t b = 0; b < bands; ++b) {
        o[b] = wsum > 0 ? to_byte(acc[b] / wsum) : nodata.value_or(0);
      }
    }
  }
  return out;
}

std::vector<std::uint8_t> area_downsample_serial(std::span<const std::uint8_t> src, std::size_t width,
                                                 std::size_t height, std::size_t bands, double factor,
                                                 std::size_t out_w, std::size_t out_h,
                                                 std::optional<std::uint8_t> nodata) {
  std::vector<std::uint8_t> out(out_w * out_h * bands);
  for (std::size_t oy = 0; oy < out_h; ++oy) {
    for (std::size_t ox = 0; ox < out_w; ++ox) {
      const double x0 = ox * factor, x1 = (ox + 1) * factor;
      const double y0 = oy * factor, y1 = (oy + 1) * factor;
      std::vector<double> acc(bands, 0.0);
      double wsum = 0.0;
      for (std::size_t y = 0; y < height; ++y) {
        const double wy = std::min<double>(y + 1, y1) - std::max<double>(y, y0);
        if (wy <= 0) continue;
        for (std::size_t x = 0; x < width; ++x) {
          const double wx = std::min<double>(x + 1, x1) - std::max<double>(x, x0);
          if (wx <= 0) continue;
          const std::uint8_t* p = src.data() + (y * width + x) * bands;
          if (all_nodata(p, bands, nodata)) continue;
          wsum += wx * wy;
          for (std::size_t b = 0; b < bands; ++b) acc[b] += wx * wy * p[b];
        }
      }
      for (std::size_t b = 0; b < bands; ++b) {
        out[(oy * out_w + ox) * bands + b] = wsum > 0 ? to_byte(acc[b] / wsum) : nodata.value_or(0);
      }
    }
  }
  return out;
}

ImageF bilinear_resize(const ImageF& src, std::size_t out_w, std::size_t out_h) {
  const std::size_t c = src.channels;
  std::vector<LinearTap> xt(out_w), yt(out_h);
  for (std::size_t x = 0; x < out_w; ++x) xt[x] = linear_tap(x, src.width, out_w);
  for (std::size_t y = 0; y < out_h; ++y) yt[y] = linear_tap(y, src.height, out_h);

  ImageF horiz(out_w, src.height, c);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t yy = 0; yy < static_cast<std::ptrdiff_t>(src.height); ++yy) {
    const auto y = static_cast<std::size_t>(yy);
    for (std::size_t x = 0; x < out_w; ++x) {
      const LinearTap& t = xt[x];
      for (std::size_t ch = 0; ch < c; ++ch) {
        horiz.at(x, y, ch) = src.at(t.i0, y, ch) * (1.0 - t.frac) + src.at(t.i1, y, ch) * t.frac;
      }
    }
  }
  ImageF out(out_w, out_h, c);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t yy = 0; yy < static_cast<std::ptrdiff_t>(out_h); ++yy) {
    const auto y = static_cast<std::size_t>(yy);
    const LinearTap& t = yt[y];
    for (std::size_t x = 0; x < out_w; ++x) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        out.at(x, y, ch) = horiz.at(x, t.i0, ch) * (1.0 - t.frac) + horiz.at(x, t.i1, ch) * t.frac;
      }
    }
  }
  return out;
}

ImageF bilinear_resize_serial(const ImageF& src, std::size_t out_w, std::size_t out_h) {
  ImageF out(out_w, out_h, src.channels);
  for (std::size_t y = 0; y < out_h; ++y) {
    const LinearTap ty = linear_tap(y, src.height, out_h);
    for (std::size_t x = 0; x < out_w; ++x) {
      const LinearTap tx = linear_tap(x, src.width, out_w);
      for (std::size_t ch = 0; ch < src.channels; ++ch) {
        const double top = src.at(tx.i0, ty.i0, ch) * (1 - tx.frac) + src.at(tx.i1, ty.i0, ch) * tx.frac;
        const double bot = src.at(tx.i0, ty.i1, ch) * (1 - tx.frac) + src.at(tx.i1, ty.i1, ch) * tx.frac;
        out.at(x, y, ch) = top * (1 - ty.frac) + bot * ty.frac;
      }
    }
  }
  return out;
}

}  // namespace rooftop::kernels
