#include "rooftop/testkit.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "rooftop/raster_io.hpp"
#include "rooftop/rng.hpp"

namespace rooftop {

namespace fs = std::filesystem;

void FixtureSpec::validate() const {
  if (buildings == 0) throw std::invalid_argument("fixture needs at least one building");
  for (const auto* w : {&pitch_weights, &material_weights}) {
    if (w->size() != 4) throw std::invalid_argument("fixture class weights need 4 entries");
    double sum = 0.0;
    for (double v : *w) {
      if (!(v >= 0.0)) throw std::invalid_argument("fixture class weights must be non-negative");
      sum += v;
    }
    if (!(sum > 0.0)) throw std::invalid_argument("fixture class weights sum to zero");
  }
  if (!(pixel_size > 0 && tile_size > 0 && slot_size > 0)) throw std::invalid_argument("fixture sizes must be positive");
  if (slot_size < 16.0) throw std::invalid_argument("slot size below 16 m cannot hold a building and its chip");
  if (embedding_dim < 8) throw std::invalid_argument("embedding dimension must be at least 8");
  if (!(separation > 0)) throw std::invalid_argument("separation must be positive");
}

std::vector<std::size_t> largest_remainder(const std::vector<double>& weights, std::size_t n) {
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<std::size_t> counts(weights.size());
  std::vector<std::pair<double, std::size_t>> rem;
  std::size_t given = 0;
  for (std::size_t c = 0; c < weights.size(); ++c) {
    const double exact = weights[c] / sum * static_cast<double>(n);
    counts[c] = static_cast<std::size_t>(std::floor(exact));
    given += counts[c];
    rem.emplace_back(exact - std::floor(exact), c);
  }
  std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; given < n; ++i, ++given) ++counts[rem[i % rem.size()].second];
  return counts;
}

namespace {

struct Placed {
  double cx, cy, half_w, half_h, angle;
  std::size_t pitch, material;
  bool cloud;
};

Ring rectangle_ring(const Placed& p) {
  const double c = std::cos(p.angle), s = std::sin(p.angle);
  Ring r;
  for (auto [u, v] : {std::pair{-p.half_w, -p.half_h}, {p.half_w, -p.half_h}, {p.half_w, p.half_h}, {-p.half_w, p.half_h}}) {
    r.push_back({p.cx + u * c - v * s, p.cy + u * s + v * c});
  }
  r.push_back(r.front());
  return r;
}

std::uint32_t cell_hash(long long a, long long b, std::uint64_t seed) {
  return static_cast<std::uint32_t>(mix_seed(seed, static_cast<std::uint64_t>(a) * 73856093ULL ^ static_cast<std::uint64_t>(b)));
}

std::array<double, 3> roof_color(const Placed& p, double u, double v, std::uint64_t seed) {
  // material sets the base colour and surface pattern
  std::array<double, 3> rgb{};
  switch (p.material) {
    case 0: {  // healthy metal: corrugated blue-grey
      rgb = {150, 162, 178};
      const double k = std::fmod(std::abs(v) + 10.0, 1.0) < 0.5 ? 14.0 : -14.0;
      for (double& c : rgb) c += k;
      break;
    }
    case 1: rgb = {192, 186, 176}; break;  // concrete
    case 2: {  // irregular metal: rusty patches
      rgb = {146, 96, 64};
      const double k = static_cast<double>(cell_hash(std::lround(u), std::lround(v), seed) % 70) - 35.0;
      rgb[0] += k;
      rgb[1] += 0.6 * k;
      break;
    }
    default: {  // incomplete: blockwork
      rgb = {112, 106, 100};
      const bool odd = (static_cast<long long>(std::floor(u / 2.0)) + static_cast<long long>(std::floor(v / 2.0))) & 1;
      for (double& c : rgb) c += odd ? 30.0 : -10.0;
      break;
    }
  }
  // pitch sets the shading
  double shade = 1.0;
  switch (p.pitch) {
    case 0: shade = v > 0 ? 1.12 : 0.78; break;  // gable: two planes along the ridge
    case 1: {                                     // hip: four facets
      const double nu = u / p.half_w, nv = v / p.half_h;
      if (std::abs(nu) > std::abs(nv)) shade = nu > 0 ? 0.95 : 0.72;
      else shade = nv > 0 ? 1.15 : 0.85;
      break;
    }
    case 2:  // flat: parapet rim
      if (std::abs(u) > p.half_w - 0.6 || std::abs(v) > p.half_h - 0.6) shade = 0.6;
      break;
    default: {  // no roof: walls around exposed interior
      if (std::abs(u) > p.half_w - 0.5 || std::abs(v) > p.half_h - 0.5) {
        shade = 0.45;
      } else {
        rgb = {96, 84, 70};
        shade = 0.8 + static_cast<double>(cell_hash(std::lround(2 * u), std::lround(2 * v), seed + 1) % 40) / 100.0;
      }
      break;
    }
  }
  for (double& c : rgb) c *= shade;
  return rgb;
}

std::uint8_t clamp8(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

std::vector<std::vector<double>> class_centers(std::size_t classes, std::size_t first_axis, std::size_t dim,
                                               double separation) {
  // orthonormal axes put every pair of centers exactly `separation` apart
  std::vector<std::vector<double>> centers(classes, std::vector<double>(dim, 0.0));
  for (std::size_t c = 0; c < classes; ++c) centers[c][first_axis + c] = separation / std::sqrt(2.0);
  return centers;
}

}  // namespace

std::size_t nearest_center(const std::vector<std::vector<double>>& centers, std::span<const float> v) {
  std::size_t best = 0;
  double best_d = INFINITY;
  for (std::size_t c = 0; c < centers.size(); ++c) {
    double d = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) d += (v[i] - centers[c][i]) * (v[i] - centers[c][i]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

Fixture generate_fixture(const FixtureSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  Fixture f;
  f.spec = spec;

  const std::size_t slots_per_tile = static_cast<std::size_t>(std::floor(spec.tile_size / spec.slot_size));
  const std::size_t slots_x = slots_per_tile * spec.tiles_x, slots_y = slots_per_tile * spec.tiles_y;
  const std::size_t total = spec.buildings + spec.clouds;
  if (slots_per_tile == 0 || total > slots_x * slots_y) {
    throw std::invalid_argument("cannot place " + std::to_string(total) + " buildings in " +
                                std::to_string(slots_x * slots_y) + " slots");
  }
  std::vector<std::size_t> slots(slots_x * slots_y);
  std::iota(slots.begin(), slots.end(), 0);
  rng.shuffle(slots);
  slots.resize(total);

  auto expand = [&](const std::vector<double>& w) {
    std::vector<std::size_t> classes;
    const auto counts = largest_remainder(w, spec.buildings);
    for (std::size_t c = 0; c < counts.size(); ++c) classes.insert(classes.end(), counts[c], c);
    rng.shuffle(classes);
    return classes;
  };
  const auto pitch = expand(spec.pitch_weights);
  const auto material = expand(spec.material_weights);

  // slot centre in world coordinates; tile (tx, ty) spans tile_size with
  // slots packed from its upper-left corner
  auto slot_center = [&](std::size_t s) {
    const std::size_t sx = s % slots_x, sy = s / slots_x;
    const double x = spec.origin_x + static_cast<double>(sx / slots_per_tile) * spec.tile_size +
                     (static_cast<double>(sx % slots_per_tile) + 0.5) * spec.slot_size;
    const double y = spec.origin_y - static_cast<double>(sy / slots_per_tile) * spec.tile_size -
                     (static_cast<double>(sy % slots_per_tile) + 0.5) * spec.slot_size;
    return std::pair{x, y};
  };

  std::vector<Placed> placed;
  const double max_half = 0.3 * spec.slot_size;
  for (std::size_t i = 0; i < total; ++i) {
    auto [x, y] = slot_center(slots[i]);
    Placed p{};
    p.cloud = i >= spec.buildings;
    if (p.cloud) {
      p.cx = x;
      p.cy = y;
      p.half_w = p.half_h = 0.15 * spec.slot_size;
    } else {
      p.cx = x + rng.uniform(-1.0, 1.0);
      p.cy = y + rng.uniform(-1.0, 1.0);
      p.half_w = std::min(max_half, rng.uniform(3.5, 5.5));
      p.half_h = std::min(max_half, rng.uniform(3.0, 5.0));
      p.angle = rng.uniform(-0.45, 0.45);
      p.pitch = pitch[i];
      p.material = material[i];
    }
    placed.push_back(p);
  }

  // raster
  const auto width = static_cast<std::size_t>(std::lround(static_cast<double>(spec.tiles_x) * spec.tile_size / spec.pixel_size));
  const auto height = static_cast<std::size_t>(std::lround(static_cast<double>(spec.tiles_y) * spec.tile_size / spec.pixel_size));
  GeoTransform t;
  t.origin_x = spec.origin_x;
  t.origin_y = spec.origin_y;
  t.pixel_w = spec.pixel_size;
  t.pixel_h = -spec.pixel_size;
  f.raster = GeoRaster(width, height, 3, t);
  f.raster.id = "fixture";
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      const double n = rng.uniform(-12.0, 12.0);
      f.raster.at(c, r, 0) = clamp8(72 + n);
      f.raster.at(c, r, 1) = clamp8(112 + n);
      f.raster.at(c, r, 2) = clamp8(60 + n);
    }
  }
  for (std::size_t i = 0; i < placed.size(); ++i) {
    const Placed& p = placed[i];
    const double reach = std::hypot(p.half_w, p.half_h) + 1.0;
    const double cs = std::cos(p.angle), sn = std::sin(p.angle);
    const auto c0 = static_cast<std::size_t>(std::max(0.0, std::floor(t.x_to_col(p.cx - reach))));
    const auto c1 = std::min(width, static_cast<std::size_t>(std::ceil(t.x_to_col(p.cx + reach))));
    const auto r0 = static_cast<std::size_t>(std::max(0.0, std::floor(t.y_to_row(p.cy + reach))));
    const auto r1 = std::min(height, static_cast<std::size_t>(std::ceil(t.y_to_row(p.cy - reach))));
    for (std::size_t r = r0; r < r1; ++r) {
      for (std::size_t c = c0; c < c1; ++c) {
        const auto [x, y] = t.pixel_center(static_cast<std::int64_t>(c), static_cast<std::int64_t>(r));
        const double dx = x - p.cx, dy = y - p.cy;
        const double u = dx * cs + dy * sn, v = -dx * sn + dy * cs;
        if (std::abs(u) > p.half_w || std::abs(v) > p.half_h) continue;
        const auto rgb = roof_color(p, u, v, spec.seed + i);
        const double n = rng.uniform(-6.0, 6.0);
        for (std::size_t b = 0; b < 3; ++b) f.raster.at(c, r, b) = clamp8(rgb[b] + n);
      }
    }
  }
  // clouds cover the whole chip window and a margin
  for (const Placed& p : placed) {
    if (!p.cloud) continue;
    const double half = 2.0 * p.half_w + 1.5;
    const auto c0 = static_cast<std::size_t>(std::max(0.0, std::floor(t.x_to_col(p.cx - half))));
    const auto c1 = std::min(width, static_cast<std::size_t>(std::ceil(t.x_to_col(p.cx + half))));
    const auto r0 = static_cast<std::size_t>(std::max(0.0, std::floor(t.y_to_row(p.cy + half))));
    const auto r1 = std::min(height, static_cast<std::size_t>(std::ceil(t.y_to_row(p.cy - half))));
    for (std::size_t r = r0; r < r1; ++r)
      for (std::size_t c = c0; c < c1; ++c)
        for (std::size_t b = 0; b < 3; ++b) f.raster.at(c, r, b) = 255;
  }

  // footprints, grouped on the same grid the loader uses
  for (std::size_t i = 0; i < placed.size(); ++i) {
    BuildingFootprint fp;
    char id[32];
    if (placed[i].cloud) std::snprintf(id, sizeof id, "C%03zu", i - spec.buildings + 1);
    else std::snprintf(id, sizeof id, "B%04zu", i + 1);
    fp.id = id;
    fp.rings.push_back(rectangle_ring(placed[i]));
    f.footprints.push_back(std::move(fp));
  }
  Rect extent = f.footprints.front().mbr();
  for (const auto& fp : f.footprints) extent = extent.united(fp.mbr());
  const TileGrid grid = TileGrid::anchored_at(extent, spec.tile_size);
  for (auto& fp : f.footprints) {
    const Point c = fp.centroid();
    fp.tile_id = grid.tile_of(c.x, c.y);
  }

  // labels
  const auto& pitch_cls = task_classes(Task::roof_pitch);
  const auto& mat_cls = task_classes(Task::roof_material);
  auto add_labels = [&](Task task, const std::vector<std::size_t>& cls_of, const std::vector<std::string>& names,
                        std::map<std::string, std::string>& truth) {
    std::vector<std::vector<std::size_t>> by_class(names.size());
    for (std::size_t i = 0; i < spec.buildings; ++i) by_class[cls_of[i]].push_back(i);
    std::vector<char> mined(spec.buildings, 0);
    for (std::size_t c = 1; c < names.size(); ++c) {
      auto members = by_class[c];
      rng.shuffle(members);
      const auto n = static_cast<std::size_t>(std::floor(spec.mined_fraction * static_cast<double>(members.size())));
      for (std::size_t k = 0; k < n; ++k) mined[members[k]] = 1;
    }
    for (std::size_t i = 0; i < spec.buildings; ++i) {
      LabeledSample s;
      s.building_id = f.footprints[i].id;
      s.task = task;
      s.label = names[cls_of[i]];
      s.group_id = f.footprints[i].tile_id;
      s.origin = mined[i] ? Origin::mined : Origin::surveyed;
      truth[s.building_id] = s.label;
      f.labels.push_back(std::move(s));
    }
  };
  add_labels(Task::roof_pitch, pitch, pitch_cls, f.pitch_truth);
  add_labels(Task::roof_material, material, mat_cls, f.material_truth);

  // embeddings
  f.pitch_centers = class_centers(pitch_cls.size(), 0, spec.embedding_dim, spec.separation);
  f.material_centers = class_centers(mat_cls.size(), pitch_cls.size(), spec.embedding_dim, spec.separation);
  for (std::size_t i = 0; i < spec.buildings; ++i) {
    EmbeddingRecord e;
    e.building_id = f.footprints[i].id;
    e.model_id = spec.model_id;
    e.vector.resize(spec.embedding_dim);
    for (std::size_t d = 0; d < spec.embedding_dim; ++d) {
      e.vector[d] = static_cast<float>(f.pitch_centers[pitch[i]][d] + f.material_centers[material[i]][d] + rng.normal());
    }
    f.embeddings.push_back(std::move(e));
  }
  for (std::size_t i = spec.buildings; i < placed.size(); ++i) f.cloud_ids.push_back(f.footprints[i].id);
  return f;
}

void write_fixture(const Fixture& f, const fs::path& dir) {
  fs::create_directories(dir);
  // two overlapping pieces with different formats and dates
  const std::size_t w = f.raster.width;
  const std::size_t split_a = w * 6 / 10, split_b = w * 4 / 10;
  auto piece = [&](std::size_t c0, std::size_t c1, const char* id, Date date) {
    GeoTransform t = f.raster.transform;
    t.origin_x = t.col_to_x(static_cast<double>(c0));
    GeoRaster p(c1 - c0, f.raster.height, 3, t);
    p.id = id;
    p.acquired = date;
    for (std::size_t r = 0; r < f.raster.height; ++r) {
      const auto* src = f.raster.pixel(c0, r);
      std::copy(src, src + (c1 - c0) * 3, p.data.begin() + static_cast<std::ptrdiff_t>(r * (c1 - c0) * 3));
    }
    return p;
  };
  using namespace std::chrono;
  const Date west_date = year{2021} / January / 15, east_date = year{2022} / June / 1;
  write_png_raster(piece(0, split_a, "west", west_date), dir / "west.png");
  write_geotiff(piece(split_b, w, "east", east_date), dir / "east.tif", TiffCompression::deflate);
  write_mosaic_manifest({{"west.png", west_date}, {"east.tif", east_date}}, dir / "mosaic.ndjson");

  write_footprints(f.footprints, dir / "footprints.geojson");
  write_labels(f.labels, dir / "labels.csv");
  write_embeddings(f.embeddings, dir / "embeddings.emb1");

  nlohmann::ordered_json j;
  j["seed"] = f.spec.seed;
  j["buildings"] = f.spec.buildings;
  j["clouds"] = f.cloud_ids;
  j["tile_size"] = f.spec.tile_size;
  j["pixel_size"] = f.spec.pixel_size;
  j["embedding_dim"] = f.spec.embedding_dim;
  j["separation"] = f.spec.separation;
  for (Task task : {Task::roof_pitch, Task::roof_material}) {
    const auto& weights = task == Task::roof_pitch ? f.spec.pitch_weights : f.spec.material_weights;
    const auto counts = largest_remainder(weights, f.spec.buildings);
    auto& node = j["classes"][to_string(task)];
    const auto& names = task_classes(task);
    for (std::size_t c = 0; c < names.size(); ++c) node[names[c]] = counts[c];
  }
  std::ofstream(dir / "fixture.json") << j.dump(2) << '\n';
}

std::vector<LabeledSample> split_fixture(std::uint64_t seed, std::size_t groups,
                                         const std::vector<std::size_t>& class_totals) {
  Rng rng(seed);
  const std::size_t n = std::accumulate(class_totals.begin(), class_totals.end(), std::size_t{0});
  if (groups == 0 || groups > n) throw std::invalid_argument("group count must lie in [1, samples]");
  // uneven group sizes, at least one sample each
  std::vector<double> weights(groups);
  for (double& w : weights) w = std::exp(0.6 * rng.normal());
  std::vector<std::size_t> sizes = largest_remainder(weights, n - groups);
  for (auto& s : sizes) ++s;

  const auto& names = task_classes(Task::roof_pitch);
  std::vector<std::size_t> labels;
  for (std::size_t c = 0; c < class_totals.size(); ++c) labels.insert(labels.end(), class_totals[c], c);
  rng.shuffle(labels);

  std::vector<LabeledSample> out;
  out.reserve(n);
  std::size_t k = 0;
  for (std::size_t g = 0; g < groups; ++g) {
    for (std::size_t i = 0; i < sizes[g]; ++i, ++k) {
      LabeledSample s;
      char id[24];
      std::snprintf(id, sizeof id, "S%05zu", k);
      s.building_id = id;
      s.task = Task::roof_pitch;
      s.label = names[labels[k] % names.size()];
      s.group_id = "G" + std::to_string(g);
      // a few minority samples came from similarity mining
      s.origin = labels[k] != 0 && rng.bernoulli(0.05) ? Origin::mined : Origin::surveyed;
      out.push_back(std::move(s));
    }
  }
  return out;
}

}  // namespace rooftop
