#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rooftop/footprint.hpp"
#include "rooftop/geo.hpp"
#include "rooftop/kernels.hpp"

namespace rooftop {

enum class QualityFlag { ok, obscured };
std::string to_string(QualityFlag f);
QualityFlag quality_flag_from(const std::string& s);

struct ChipSource {
  std::string raster_id;
  std::int64_t col0 = 0, row0 = 0;
  std::size_t width = 0, height = 0;
};

/// RGB window cropped around one footprint.
struct ImageChip {
  std::string building_id;
  std::string tile_id;
  std::size_t width = 0, height = 0;
  std::vector<std::uint8_t> pixels;  // height x width x 3
  std::vector<bool> pad_mask;        // height x width
  ChipSource source;
  QualityFlag quality_flag = QualityFlag::ok;

  void validate() const;
  double pad_fraction() const;
  std::uint8_t at(std::size_t x, std::size_t y, std::size_t c) const { return pixels[(y * width + x) * 3 + c]; }
};

constexpr double kChipScale = 2.0;

ImageChip extract_chip(const GeoRaster& raster, const BuildingFootprint& fp, double factor = kChipScale);

constexpr std::size_t kTensorSize = 224;
constexpr std::array<double, 3> kImageNetMean = {0.485, 0.456, 0.406};
constexpr std::array<double, 3> kImageNetStd = {0.229, 0.224, 0.225};

/// 224 x 224 x 3 normalized network input, interleaved by pixel.
struct ModelTensor {
  std::vector<float> values;
  std::string chip_id;
  std::uint64_t seed = 0;

  float at(std::size_t x, std::size_t y, std::size_t c) const { return values[(y * kTensorSize + x) * 3 + c]; }
  float& at(std::size_t x, std::size_t y, std::size_t c) { return values[(y * kTensorSize + x) * 3 + c]; }
};

/// Zero-pads the shorter axis to a square; the odd pixel goes bottom/right.
kernels::ImageF pad_to_square(const ImageChip& chip);

/// Pad to square, bilinear resize to 224, scale to [0,1], ImageNet-normalize.
ModelTensor preprocess_chip(const ImageChip& chip);

struct AugmentParams {
  bool hflip = false;
  bool vflip = false;
  double angle_deg = 0.0;
};

/// Draws flip/flip/rotation parameters from `seed`. Seed 0 is reserved for
/// the identity transform.
AugmentParams augment_params(std::uint64_t seed);
/// Horizontal flip, vertical flip, then rotation about the center with
/// bilinear sampling and zero fill.
ModelTensor apply_augment(const ModelTensor& t, const AugmentParams& p);
ModelTensor augment_chip(const ModelTensor& t, std::uint64_t seed);

/// Chips are persisted as RGBA PNGs whose alpha channel is zero on padding.
void write_chip_png(const ImageChip& chip, const std::filesystem::path& path);
ImageChip read_chip_png(const std::filesystem::path& path, const std::string& building_id);

/// One line of chips.ndjson.
struct ChipRecord {
  std::string building_id;
  std::string raster_id;
  std::int64_t col0 = 0, row0 = 0;
  std::size_t width = 0, height = 0;
  double pad_fraction = 0;
  QualityFlag quality_flag = QualityFlag::ok;
  std::string tile_id;
};
ChipRecord chip_record(const ImageChip& chip);
std::vector<ChipRecord> read_chip_manifest(const std::filesystem::path& path);
void write_chip_manifest(const std::vector<ChipRecord>& records, const std::filesystem::path& path);

}  // namespace rooftop
