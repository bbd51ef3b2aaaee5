#include "rooftop/footprint.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace rooftop {
namespace fs = std::filesystem;
using nlohmann::json;

double BuildingFootprint::signed_area() const {
  const Ring& r = outer();
  double a = 0.0;
  for (std::size_t i = 0; i + 1 < r.size(); ++i) a += r[i].x * r[i + 1].y - r[i + 1].x * r[i].y;
  return 0.5 * a;
}

Point BuildingFootprint::centroid() const {
  const Ring& r = outer();
  // shift to the first vertex to keep large projected coordinates well conditioned
  const Point o = r.front();
  double a = 0.0, cx = 0.0, cy = 0.0;
  for (std::size_t i = 0; i + 1 < r.size(); ++i) {
    const double x0 = r[i].x - o.x, y0 = r[i].y - o.y, x1 = r[i + 1].x - o.x, y1 = r[i + 1].y - o.y;
    const double cross = x0 * y1 - x1 * y0;
    a += cross;
    cx += (x0 + x1) * cross;
    cy += (y0 + y1) * cross;
  }
  if (a == 0.0) return o;
  return {o.x + cx / (3.0 * a), o.y + cy / (3.0 * a)};
}

Rect BuildingFootprint::mbr() const {
  Rect r{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
         -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const Point& p : outer()) {
    r.min_x = std::min(r.min_x, p.x);
    r.min_y = std::min(r.min_y, p.y);
    r.max_x = std::max(r.max_x, p.x);
    r.max_y = std::max(r.max_y, p.y);
  }
  return r;
}

void BuildingFootprint::validate() const {
  if (rings.empty()) throw FootprintError("footprint " + id + " has no rings");
  for (const Ring& r : rings) {
    if (r.size() < 4) throw FootprintError("footprint " + id + ": ring needs at least 4 points");
    if (!(r.front() == r.back())) throw FootprintError("footprint " + id + ": unclosed ring");
  }
  if (signed_area() == 0.0) throw FootprintError("footprint " + id + " has zero area");
}

TileGrid TileGrid::anchored_at(const Rect& extent, double size) {
  return {std::floor(extent.min_x / size) * size, std::floor(extent.min_y / size) * size, size};
}

std::string TileGrid::tile_of(double x, double y) const {
  const auto col = static_cast<long long>(std::floor((x - origin_x) / size));
  const auto row = static_cast<long long>(std::floor((y - origin_y) / size));
  return "T" + std::to_string(col) + "_" + std::to_string(row);
}

namespace {

Ring parse_ring(const json& coords, const std::string& id) {
  if (!coords.is_array()) throw FootprintError("feature " + id + ": ring is not an array");
  Ring ring;
  ring.reserve(coords.size());
  for (const auto& pt : coords) {
    if (!pt.is_array() || pt.size() < 2 || !pt[0].is_number() || !pt[1].is_number()) {
      throw FootprintError("feature " + id + ": malformed coordinate");
    }
    ring.push_back({pt[0].get<double>(), pt[1].get<double>()});
  }
  return ring;
}

std::vector<Ring> parse_polygon(const json& coords, const std::string& id) {
  if (!coords.is_array() || coords.empty()) throw FootprintError("feature " + id + ": empty polygon");
  std::vector<Ring> rings;
  for (const auto& r : coords) rings.push_back(parse_ring(r, id));
  return rings;
}

std::string id_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number()) {
    std::ostringstream os;
    os << v.get<double>();
    return os.str();
  }
  return {};
}

std::string feature_id(const json& feature, std::size_t ordinal) {
  if (auto p = feature.find("properties"); p != feature.end() && p->is_object()) {
    for (const char* key : {"building_id", "id"}) {
      if (auto it = p->find(key); it != p->end()) {
        auto s = id_text(*it);
        if (!s.empty()) return s;
      }
    }
  }
  if (auto it = feature.find("id"); it != feature.end()) {
    auto s = id_text(*it);
    if (!s.empty()) return s;
  }
  return std::to_string(ordinal);
}

std::vector<BuildingFootprint> from_json(const json& doc, double tile_size) {
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" || !doc.contains("features") ||
      !doc["features"].is_array()) {
    throw FootprintError("expected a GeoJSON FeatureCollection");
  }
  std::vector<BuildingFootprint> out;
  std::size_t ordinal = 0;
  for (const auto& feature : doc["features"]) {
    const std::string id = feature_id(feature, ordinal++);
    if (!feature.contains("geometry") || !feature["geometry"].is_object()) {
      throw FootprintError("feature " + id + " has no geometry");
    }
    const json& geom = feature["geometry"];
    const std::string type = geom.value("type", "");
    if (!geom.contains("coordinates")) throw FootprintError("feature " + id + " has no coordinates");
    if (type == "Polygon") {
      out.push_back({id, parse_polygon(geom["coordinates"], id), {}});
    } else if (type == "MultiPolygon") {
      const json& parts = geom["coordinates"];
      if (!parts.is_array()) throw FootprintError("feature " + id + ": malformed MultiPolygon");
      for (std::size_t i = 0; i < parts.size(); ++i) {
        out.push_back({id + "_" + std::to_string(i), parse_polygon(parts[i], id), {}});
      }
    } else {
      throw FootprintError("feature " + id + " has non-polygon geometry '" + type + "'");
    }
  }
  if (out.empty()) return out;

  Rect extent = out.front().mbr();
  for (auto& fp : out) {
    fp.validate();
    extent = extent.united(fp.mbr());
  }
  const TileGrid grid = TileGrid::anchored_at(extent, tile_size);
  for (auto& fp : out) {
    const Point c = fp.centroid();
    fp.tile_id = grid.tile_of(c.x, c.y);
  }
  return out;
}

}  // namespace

std::vector<BuildingFootprint> parse_footprints(const std::string& geojson, double tile_size) {
  json doc;
  try {
    doc = json::parse(geojson);
  } catch (const json::exception& e) {
    throw FootprintError(std::string("malformed GeoJSON: ") + e.what());
  }
  return from_json(doc, tile_size);
}

std::vector<BuildingFootprint> load_footprints(const fs::path& path, double tile_size) {
  std::ifstream in(path);
  if (!in) throw FootprintError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_footprints(ss.str(), tile_size);
}

void write_footprints(const std::vector<BuildingFootprint>& footprints, const fs::path& path) {
  nlohmann::ordered_json doc;
  doc["type"] = "FeatureCollection";
  doc["features"] = nlohmann::ordered_json::array();
  for (const auto& fp : footprints) {
    nlohmann::ordered_json f;
    f["type"] = "Feature";
    f["properties"] = {{"id", fp.id}};
    nlohmann::ordered_json rings = nlohmann::ordered_json::array();
    for (const Ring& r : fp.rings) {
      nlohmann::ordered_json ring = nlohmann::ordered_json::array();
      for (const Point& p : r) ring.push_back({p.x, p.y});
      rings.push_back(std::move(ring));
    }
    f["geometry"] = {{"type", "Polygon"}, {"coordinates", std::move(rings)}};
    doc["features"].push_back(std::move(f));
  }
  std::ofstream out(path);
  if (!out) throw FootprintError("cannot write " + path.string());
  out << doc.dump() << "\n";
}

Rect scaled_mbr(const BuildingFootprint& fp, double factor) {
  if (!(factor > 0)) throw FootprintError("scale factor must be positive");
  const Rect m = fp.mbr();
  if (m.degenerate()) throw FootprintError("footprint " + fp.id + " has a degenerate bounding rectangle");
  const double hw = 0.5 * m.width() * factor, hh = 0.5 * m.height() * factor;
  const double cx = m.center_x(), cy = m.center_y();
  return {cx - hw, cy - hh, cx + hw, cy + hh};
}

}  // namespace rooftop
