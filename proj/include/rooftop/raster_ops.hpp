#pragma once

#include <vector>

#include "rooftop/geo.hpp"

namespace rooftop {

/// Composites rasters onto a north-up grid of `target_pixel_size` covering the
/// union of their extents. Overlaps resolve by acquisition date (latest first,
/// undated last, then input order); nodata never overwrites valid samples.
GeoRaster mosaic(const std::vector<GeoRaster>& rasters, double target_pixel_size);

/// Area-weighted mean downsampling; output size is round(size / factor).
GeoRaster downsample(const GeoRaster& raster, double factor);

/// Pixel window of a CRS rectangle. `col0`/`row0` may be negative when the
/// rectangle extends past the raster; such pixels are padded and flagged.
struct Window {
  std::int64_t col0 = 0, row0 = 0;
  std::size_t width = 0, height = 0, bands = 0;
  std::vector<std::uint8_t> pixels;
  std::vector<bool> pad_mask;

  std::size_t padded_count() const;
  double pad_fraction() const;
};

Window crop_window(const GeoRaster& raster, const Rect& rect);

}  // namespace rooftop
