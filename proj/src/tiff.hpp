#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "rooftop/geo.hpp"
#include "rooftop/raster_io.hpp"

namespace rooftop::tiff {

bool has_tiff_magic(const std::vector<std::uint8_t>& bytes);

/// Decoded pixels plus whatever georeferencing the tags carried.
struct Decoded {
  GeoRaster raster;
  bool georeferenced = false;
};

Decoded decode(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> encode(const GeoRaster& raster, TiffCompression compression, std::size_t rows_per_strip);

}  // namespace rooftop::tiff
