#include "rooftop/geo.hpp"

#include <algorithm>
#include <cstdio>

namespace rooftop {

Rect Rect::united(const Rect& o) const {
  return {std::min(min_x, o.min_x), std::min(min_y, o.min_y), std::max(max_x, o.max_x),
          std::max(max_y, o.max_y)};
}

void GeoTransform::validate() const {
  if (pixel_w == 0.0 || pixel_h == 0.0) {
    throw RasterError(RasterError::Kind::invalid, "geotransform pixel size must be non-zero");
  }
}

Rect GeoTransform::extent(std::size_t width, std::size_t height) const {
  const double x0 = origin_x, x1 = col_to_x(static_cast<double>(width));
  const double y0 = origin_y, y1 = row_to_y(static_cast<double>(height));
  return {std::min(x0, x1), std::min(y0, y1), std::max(x0, x1), std::max(y0, y1)};
}

std::optional<Date> parse_iso_date(const std::string& text) {
  int y = 0;
  unsigned m = 0, d = 0;
  if (text.size() < 10 || std::sscanf(text.c_str(), "%4d-%2u-%2u", &y, &m, &d) != 3) {
    return std::nullopt;
  }
  Date date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!date.ok()) return std::nullopt;
  return date;
}

std::string format_iso_date(const Date& d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
  return buf;
}

void GeoRaster::validate() const {
  transform.validate();
  if (width < 1 || height < 1 || bands < 1) {
    throw RasterError(RasterError::Kind::invalid, "raster dimensions must be positive");
  }
  if (data.size() != width * height * bands) {
    throw RasterError(RasterError::Kind::invalid, "raster data length does not match dimensions");
  }
}

bool GeoRaster::is_nodata(std::size_t col, std::size_t row) const {
  if (!nodata) return false;
  const std::uint8_t* p = pixel(col, row);
  for (std::size_t b = 0; b < bands; ++b) {
    if (p[b] != *nodata) return false;
  }
  return true;
}

GeoRaster expand_bands(const GeoRaster& r, std::size_t bands) {
  if (r.bands == bands) return r;
  if (r.bands != 1) {
    throw RasterError(RasterError::Kind::unsupported,
                      "cannot expand " + std::to_string(r.bands) + " bands to " + std::to_string(bands));
  }
  GeoRaster out = r;
  out.bands = bands;
  out.data.assign(r.width * r.height * bands, 0);
  for (std::size_t i = 0; i < r.width * r.height; ++i) {
    std::fill_n(out.data.begin() + static_cast<std::ptrdiff_t>(i * bands), bands, r.data[i]);
  }
  return out;
}

}  // namespace rooftop
