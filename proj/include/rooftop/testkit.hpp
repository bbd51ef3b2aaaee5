#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "rooftop/embedding.hpp"
#include "rooftop/footprint.hpp"
#include "rooftop/geo.hpp"
#include "rooftop/labels.hpp"

namespace rooftop {

/// Synthetic mini-country: one raster, rectangular buildings on a slot grid,
/// labels for both tasks and Gaussian-cluster embeddings.
struct FixtureSpec {
  std::uint64_t seed = 1;
  std::size_t buildings = 200;
  // class weights in canonical class order; normalized internally
  std::vector<double> pitch_weights = {61, 28, 9, 2};
  std::vector<double> material_weights = {84, 8, 6, 2};
  std::size_t tiles_x = 5, tiles_y = 5;
  double tile_size = 100.0;   // metres; also the grouping grid
  double pixel_size = 0.5;    // metres
  double slot_size = 20.0;    // one building per slot
  double origin_x = 500000.0, origin_y = 1500000.0;  // upper-left corner
  std::size_t clouds = 4;      // extra unlabeled buildings painted over in white
  std::size_t embedding_dim = 64;
  double separation = 6.0;     // distance between class centers, in noise sigmas
  double mined_fraction = 0.1; // of minority-class samples, marked as mined
  std::string model_id = "fixture-gaussian";

  void validate() const;
};

struct Fixture {
  FixtureSpec spec;
  GeoRaster raster;
  std::vector<BuildingFootprint> footprints;  // labeled buildings first, then clouds
  std::vector<LabeledSample> labels;          // pitch rows, then material rows
  std::vector<EmbeddingRecord> embeddings;    // labeled buildings only
  std::vector<std::string> cloud_ids;
  std::map<std::string, std::string> pitch_truth, material_truth;
  std::vector<std::vector<double>> pitch_centers, material_centers;
};

/// Per-class counts for n items by the largest-remainder rule (ties to the
/// earlier class).
std::vector<std::size_t> largest_remainder(const std::vector<double>& weights, std::size_t n);

Fixture generate_fixture(const FixtureSpec& spec);

/// Writes mosaic.ndjson (over a PNG + world file piece and an overlapping
/// deflate GeoTIFF piece), footprints.geojson, labels.csv, embeddings.emb1 and
/// fixture.json into `dir`.
void write_fixture(const Fixture& f, const std::filesystem::path& dir);

/// Index of the nearest true class center for an embedding.
std::size_t nearest_center(const std::vector<std::vector<double>>& centers, std::span<const float> v);

/// Imbalanced split fixture: pitch labels with the given class totals
/// spread over `groups` groups of uneven size; a slice of the minority-class
/// samples is marked mined.
std::vector<LabeledSample> split_fixture(std::uint64_t seed, std::size_t groups = 250,
                                         const std::vector<std::size_t>& class_totals = {1717, 902, 487, 137});

}  // namespace rooftop
