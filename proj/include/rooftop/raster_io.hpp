#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rooftop/geo.hpp"

namespace rooftop {

enum class TiffCompression { none, deflate };

/// Reads a baseline GeoTIFF (8-bit, 1 or 3 bands, stripped or tiled, none or
/// deflate) or a PNG. Georeferencing comes from GeoTIFF tags or a world-file
/// sidecar. A non-zero `bands` expands single-band input to that count.
GeoRaster read_raster(const std::filesystem::path& path, std::size_t bands = 0);

/// Writes a PNG plus a six-line world file next to it (.pgw).
void write_png_raster(const GeoRaster& raster, const std::filesystem::path& path);

/// Writes a little-endian GeoTIFF with model tie point and pixel scale tags.
void write_geotiff(const GeoRaster& raster, const std::filesystem::path& path,
                   TiffCompression compression = TiffCompression::none, std::size_t rows_per_strip = 64);

/// World file lines: A, D, B, E, C, F with C/F the center of the upper-left pixel.
GeoTransform read_world_file(const std::filesystem::path& path);
void write_world_file(const GeoTransform& t, const std::filesystem::path& path);

/// Looks for .pgw/.tfw/.wld style sidecars for the given image path.
std::optional<std::filesystem::path> find_world_file(const std::filesystem::path& image);

/// Plain 8-bit PNG access without georeferencing; `channels` is 1, 3 or 4.
struct PngImage {
  std::size_t width = 0, height = 0, channels = 0;
  std::vector<std::uint8_t> data;
};
PngImage read_png(const std::filesystem::path& path);
void write_png(const PngImage& image, const std::filesystem::path& path);

struct MosaicInput {
  std::filesystem::path path;
  std::optional<Date> acquired;
};

/// NDJSON lines {"path": ..., "acquired": "YYYY-MM-DD"}; relative paths resolve
/// against the manifest's directory.
std::vector<MosaicInput> read_mosaic_manifest(const std::filesystem::path& manifest);
void write_mosaic_manifest(const std::vector<MosaicInput>& inputs, const std::filesystem::path& manifest);

/// Reads every manifest entry and stamps its acquisition date.
std::vector<GeoRaster> load_mosaic_inputs(const std::filesystem::path& manifest, std::size_t bands = 3);

}  // namespace rooftop
