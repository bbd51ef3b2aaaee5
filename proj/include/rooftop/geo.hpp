#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rooftop {

/// Axis-aligned rectangle in CRS units.
struct Rect {
  double min_x = 0, min_y = 0, max_x = 0, max_y = 0;

  double width() const { return max_x - min_x; }
  double height() const { return max_y - min_y; }
  double area() const { return width() * height(); }
  double center_x() const { return 0.5 * (min_x + max_x); }
  double center_y() const { return 0.5 * (min_y + max_y); }
  bool degenerate() const { return !(max_x > min_x) || !(max_y > min_y); }
  bool intersects(const Rect& o) const {
    return min_x < o.max_x && o.min_x < max_x && min_y < o.max_y && o.min_y < max_y;
  }
  bool contains(const Rect& o) const {
    return min_x <= o.min_x && o.max_x <= max_x && min_y <= o.min_y && o.max_y <= max_y;
  }
  Rect united(const Rect& o) const;
};

struct PixelCoord {
  double col = 0, row = 0;
};

/// Affine north-up mapping between pixel space and CRS space. The origin is
/// the outer corner of pixel (0, 0); pixel_h is negative for north-up grids.
struct GeoTransform {
  double origin_x = 0, origin_y = 0;
  double pixel_w = 1, pixel_h = -1;
  std::string crs_id;

  void validate() const;

  double col_to_x(double col) const { return origin_x + col * pixel_w; }
  double row_to_y(double row) const { return origin_y + row * pixel_h; }
  double x_to_col(double x) const { return (x - origin_x) / pixel_w; }
  double y_to_row(double y) const { return (y - origin_y) / pixel_h; }

  PixelCoord to_pixel(double x, double y) const { return {x_to_col(x), y_to_row(y)}; }
  /// CRS coordinates of the center of pixel (col, row).
  std::pair<double, double> pixel_center(std::int64_t col, std::int64_t row) const {
    return {col_to_x(static_cast<double>(col) + 0.5), row_to_y(static_cast<double>(row) + 0.5)};
  }
  Rect extent(std::size_t width, std::size_t height) const;
};

class RasterError : public std::runtime_error {
 public:
  enum class Kind { unreadable, unsupported, no_georef, invalid, crs_mismatch, empty_input, outside };

  RasterError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

using Date = std::chrono::year_month_day;

/// Parses the leading YYYY-MM-DD part of an ISO-8601 string.
std::optional<Date> parse_iso_date(const std::string& text);
std::string format_iso_date(const Date& d);

/// 8-bit raster, band-interleaved-by-pixel.
struct GeoRaster {
  std::string id;
  std::size_t width = 0, height = 0, bands = 0;
  std::vector<std::uint8_t> data;
  GeoTransform transform;
  std::optional<std::uint8_t> nodata;
  std::optional<Date> acquired;

  GeoRaster() = default;
  GeoRaster(std::size_t w, std::size_t h, std::size_t b, GeoTransform t)
      : width(w), height(h), bands(b), data(w * h * b, 0), transform(std::move(t)) {}

  void validate() const;

  std::uint8_t& at(std::size_t col, std::size_t row, std::size_t band) {
    return data[(row * width + col) * bands + band];
  }
  std::uint8_t at(std::size_t col, std::size_t row, std::size_t band) const {
    return data[(row * width + col) * bands + band];
  }
  const std::uint8_t* pixel(std::size_t col, std::size_t row) const {
    return data.data() + (row * width + col) * bands;
  }
  /// True when every band equals the nodata value.
  bool is_nodata(std::size_t col, std::size_t row) const;
  Rect extent() const { return transform.extent(width, height); }
};

/// Replicates a single band to `bands` or fails for other mismatches.
GeoRaster expand_bands(const GeoRaster& r, std::size_t bands);

}  // namespace rooftop
