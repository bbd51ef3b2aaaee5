#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "rooftop/geo.hpp"

namespace rooftop {

struct Point {
  double x = 0, y = 0;
  bool operator==(const Point&) const = default;
};
using Ring = std::vector<Point>;

class FootprintError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BuildingFootprint {
  std::string id;
  std::vector<Ring> rings;  // outer ring first, then holes
  std::string tile_id;

  const Ring& outer() const { return rings.front(); }
  /// Shoelace area of the outer ring (positive when counter-clockwise).
  double signed_area() const;
  /// Area centroid of the outer ring.
  Point centroid() const;
  Rect mbr() const;
  void validate() const;
};

constexpr double kDefaultTileSize = 500.0;

/// Square grid used to group buildings; origin is the floor-to-`size` of the
/// dataset extent minimum.
struct TileGrid {
  double origin_x = 0, origin_y = 0, size = kDefaultTileSize;

  static TileGrid anchored_at(const Rect& extent, double size = kDefaultTileSize);
  std::string tile_of(double x, double y) const;
};

/// Loads a GeoJSON FeatureCollection of Polygon/MultiPolygon features. Each
/// polygon part becomes one footprint; multi-part ids get a "_<part>" suffix.
std::vector<BuildingFootprint> load_footprints(const std::filesystem::path& path,
                                               double tile_size = kDefaultTileSize);
std::vector<BuildingFootprint> parse_footprints(const std::string& geojson, double tile_size = kDefaultTileSize);

/// Writes footprints as a FeatureCollection of Polygons with an "id" property.
void write_footprints(const std::vector<BuildingFootprint>& footprints, const std::filesystem::path& path);

/// Outer-ring MBR grown about its center so each side is multiplied by `factor`.
Rect scaled_mbr(const BuildingFootprint& fp, double factor);

}  // namespace rooftop
