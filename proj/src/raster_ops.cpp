#include "rooftop/raster_ops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rooftop/kernels.hpp"

namespace rooftop {
using Kind = RasterError::Kind;

namespace {

constexpr double kSnap = 1e-9;

std::vector<std::size_t> precedence_order(const std::vector<GeoRaster>& rasters) {
  std::vector<std::size_t> order(rasters.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& da = rasters[a].acquired;
    const auto& db = rasters[b].acquired;
    if (da.has_value() != db.has_value()) return da.has_value();
    if (da && db && *da != *db) return *da > *db;
    return false;
  });
  return order;
}

}  // namespace

GeoRaster mosaic(const std::vector<GeoRaster>& rasters, double target_pixel_size) {
  if (rasters.empty()) throw RasterError(Kind::empty_input, "mosaic needs at least one raster");
  if (!(target_pixel_size > 0)) throw RasterError(Kind::invalid, "target pixel size must be positive");
  const std::string& crs = rasters.front().transform.crs_id;
  const std::size_t bands = rasters.front().bands;
  Rect extent = rasters.front().extent();
  for (const auto& r : rasters) {
    r.validate();
    if (r.transform.crs_id != crs) {
      throw RasterError(Kind::crs_mismatch, "CRS mismatch: '" + r.transform.crs_id + "' vs '" + crs + "'");
    }
    if (r.bands != bands) throw RasterError(Kind::invalid, "mosaic inputs must share a band count");
    extent = extent.united(r.extent());
  }

  GeoTransform t;
  t.origin_x = extent.min_x;
  t.origin_y = extent.max_y;
  t.pixel_w = target_pixel_size;
  t.pixel_h = -target_pixel_size;
  t.crs_id = crs;
  const auto out_w = static_cast<std::size_t>(std::max(1.0, std::ceil(extent.width() / target_pixel_size - kSnap)));
  const auto out_h = static_cast<std::size_t>(std::max(1.0, std::ceil(extent.height() / target_pixel_size - kSnap)));
  GeoRaster out(out_w, out_h, bands, t);
  out.id = "mosaic";

  std::optional<std::uint8_t> nodata;
  for (const auto& r : rasters) {
    if (r.nodata) { nodata = r.nodata; break; }
  }
  const std::uint8_t fill = nodata.value_or(0);
  const auto order = precedence_order(rasters);
  for (const auto& r : rasters) {
    if (r.acquired && (!out.acquired || *r.acquired > *out.acquired)) out.acquired = r.acquired;
  }

  bool uncovered = false;
#pragma omp parallel for schedule(static) reduction(|| : uncovered)
  for (std::ptrdiff_t rr = 0; rr < static_cast<std::ptrdiff_t>(out_h); ++rr) {
    const auto row = static_cast<std::size_t>(rr);
    for (std::size_t col = 0; col < out_w; ++col) {
      const auto [x, y] = t.pixel_center(static_cast<std::int64_t>(col), static_cast<std::int64_t>(row));
      std::uint8_t* dst = &out.at(col, row, 0);
      bool filled = false;
      for (std::size_t idx : order) {
        const GeoRaster& src = rasters[idx];
        const double sc = std::floor(src.transform.x_to_col(x));
        const double sr = std::floor(src.transform.y_to_row(y));
        if (sc < 0 || sr < 0 || sc >= static_cast<double>(src.width) || sr >= static_cast<double>(src.height)) {
          continue;
        }
        const auto c = static_cast<std::size_t>(sc), r = static_cast<std::size_t>(sr);
        if (src.is_nodata(c, r)) continue;
        std::copy_n(src.pixel(c, r), bands, dst);
        filled = true;
        break;
      }
      if (!filled) {
        std::fill_n(dst, bands, fill);
        uncovered = true;
      }
    }
  }
  if (nodata || uncovered) out.nodata = fill;
  return out;
}

GeoRaster downsample(const GeoRaster& raster, double factor) {
  raster.validate();
  if (!(factor >= 1.0)) throw RasterError(Kind::invalid, "downsample factor must be >= 1");
  if (factor == 1.0) return raster;
  const auto out_w = static_cast<std::size_t>(std::lround(static_cast<double>(raster.width) / factor));
  const auto out_h = static_cast<std::size_t>(std::lround(static_cast<double>(raster.height) / factor));
  if (out_w == 0 || out_h == 0) throw RasterError(Kind::invalid, "downsampled raster would be empty");

  GeoTransform t = raster.transform;
  t.pixel_w *= factor;
  t.pixel_h *= factor;
  GeoRaster out(out_w, out_h, raster.bands, t);
  out.id = raster.id;
  out.nodata = raster.nodata;
  out.acquired = raster.acquired;
  out.data = kernels::area_downsample(raster.data, raster.width, raster.height, raster.bands, factor, out_w, out_h,
                                      raster.nodata);
  return out;
}

std::size_t Window::padded_count() const {
  return static_cast<std::size_t>(std::count(pad_mask.begin(), pad_mask.end(), true));
}

double Window::pad_fraction() const {
  return pad_mask.empty() ? 0.0 : static_cast<double>(padded_count()) / static_cast<double>(pad_mask.size());
}

Window crop_window(const GeoRaster& raster, const Rect& rect) {
  if (rect.degenerate()) throw RasterError(Kind::invalid, "crop rectangle is degenerate");
  if (!rect.intersects(raster.extent())) {
    throw RasterError(Kind::outside, "crop rectangle lies outside the raster extent");
  }
  const GeoTransform& t = raster.transform;
  const double ca = t.x_to_col(rect.min_x), cb = t.x_to_col(rect.max_x);
  const double ra = t.y_to_row(rect.min_y), rb = t.y_to_row(rect.max_y);
  const auto c0 = static_cast<std::int64_t>(std::floor(std::min(ca, cb) + kSnap));
  const auto r0 = static_cast<std::int64_t>(std::floor(std::min(ra, rb) + kSnap));
  auto c1 = static_cast<std::int64_t>(std::ceil(std::max(ca, cb) - kSnap));
  auto r1 = static_cast<std::int64_t>(std::ceil(std::max(ra, rb) - kSnap));
  c1 = std::max(c1, c0 + 1);
  r1 = std::max(r1, r0 + 1);

  Window w;
  w.col0 = c0;
  w.row0 = r0;
  w.width = static_cast<std::size_t>(c1 - c0);
  w.height = static_cast<std::size_t>(r1 - r0);
  w.bands = raster.bands;
  w.pixels.assign(w.width * w.height * w.bands, raster.nodata.value_or(0));
  w.pad_mask.assign(w.width * w.height, true);
  const auto W = static_cast<std::int64_t>(raster.width), H = static_cast<std::int64_t>(raster.height);
  for (std::int64_t r = std::max<std::int64_t>(r0, 0); r < std::min(r1, H); ++r) {
    for (std::int64_t c = std::max<std::int64_t>(c0, 0); c < std::min(c1, W); ++c) {
      const auto wi = static_cast<std::size_t>((r - r0) * static_cast<std::int64_t>(w.width) + (c - c0));
      std::copy_n(raster.pixel(static_cast<std::size_t>(c), static_cast<std::size_t>(r)), w.bands,
                  w.pixels.begin() + static_cast<std::ptrdiff_t>(wi * w.bands));
      w.pad_mask[wi] = false;
    }
  }
  return w;
}

}  // namespace rooftop
