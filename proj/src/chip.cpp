#include "rooftop/chip.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "rooftop/raster_io.hpp"
#include "rooftop/raster_ops.hpp"
#include "rooftop/rng.hpp"

namespace rooftop {
namespace fs = std::filesystem;

std::string to_string(QualityFlag f) { return f == QualityFlag::ok ? "ok" : "obscured"; }

QualityFlag quality_flag_from(const std::string& s) {
  if (s == "ok") return QualityFlag::ok;
  if (s == "obscured") return QualityFlag::obscured;
  throw std::invalid_argument("unknown quality flag '" + s + "'");
}

void ImageChip::validate() const {
  if (width < 1 || height < 1) throw std::invalid_argument("chip " + building_id + " is empty");
  if (pixels.size() != width * height * 3 || pad_mask.size() != width * height) {
    throw std::invalid_argument("chip " + building_id + " buffers do not match its size");
  }
}

double ImageChip::pad_fraction() const {
  if (pad_mask.empty()) return 0.0;
  return static_cast<double>(std::count(pad_mask.begin(), pad_mask.end(), true)) /
         static_cast<double>(pad_mask.size());
}

ImageChip extract_chip(const GeoRaster& raster, const BuildingFootprint& fp, double factor) {
  GeoRaster expanded;
  if (raster.bands != 3) expanded = expand_bands(raster, 3);
  const GeoRaster& rgb = raster.bands == 3 ? raster : expanded;
  Window w;
  try {
    w = crop_window(rgb, scaled_mbr(fp, factor));
  } catch (const RasterError& e) {
    if (e.kind() == RasterError::Kind::outside) {
      throw RasterError(RasterError::Kind::outside, "footprint " + fp.id + " lies outside the imagery");
    }
    throw;
  }
  ImageChip chip;
  chip.building_id = fp.id;
  chip.tile_id = fp.tile_id;
  chip.width = w.width;
  chip.height = w.height;
  chip.pixels = std::move(w.pixels);
  chip.pad_mask = std::move(w.pad_mask);
  chip.source = {raster.id, w.col0, w.row0, w.width, w.height};
  chip.quality_flag = QualityFlag::ok;
  return chip;
}

kernels::ImageF pad_to_square(const ImageChip& chip) {
  chip.validate();
  const std::size_t side = std::max(chip.width, chip.height);
  const std::size_t off_x = (side - chip.width) / 2, off_y = (side - chip.height) / 2;
  kernels::ImageF sq(side, side, 3, 0.0);
  for (std::size_t y = 0; y < chip.height; ++y) {
    for (std::size_t x = 0; x < chip.width; ++x) {
      for (std::size_t c = 0; c < 3; ++c) sq.at(x + off_x, y + off_y, c) = chip.at(x, y, c);
    }
  }
  return sq;
}

ModelTensor preprocess_chip(const ImageChip& chip) {
  const kernels::ImageF resized = kernels::bilinear_resize(pad_to_square(chip), kTensorSize, kTensorSize);
  ModelTensor t;
  t.chip_id = chip.building_id;
  t.values.resize(kTensorSize * kTensorSize * 3);
  for (std::size_t i = 0; i < kTensorSize * kTensorSize; ++i) {
    for (std::size_t c = 0; c < 3; ++c) {
      t.values[i * 3 + c] = static_cast<float>((resized.v[i * 3 + c] / 255.0 - kImageNetMean[c]) / kImageNetStd[c]);
    }
  }
  return t;
}

AugmentParams augment_params(std::uint64_t seed) {
  if (seed == 0) return {};
  Rng rng(seed);
  AugmentParams p;
  p.hflip = rng.bernoulli(0.5);
  p.vflip = rng.bernoulli(0.5);
  p.angle_deg = rng.uniform(-90.0, 90.0);
  return p;
}

ModelTensor apply_augment(const ModelTensor& t, const AugmentParams& p) {
  constexpr std::size_t n = kTensorSize;
  ModelTensor flipped = t;
  if (p.hflip || p.vflip) {
    for (std::size_t y = 0; y < n; ++y) {
      for (std::size_t x = 0; x < n; ++x) {
        const std::size_t sx = p.hflip ? n - 1 - x : x, sy = p.vflip ? n - 1 - y : y;
        for (std::size_t c = 0; c < 3; ++c) flipped.at(x, y, c) = t.at(sx, sy, c);
      }
    }
  }
  if (p.angle_deg == 0.0) return flipped;

  ModelTensor out = flipped;
  const double theta = p.angle_deg * M_PI / 180.0;
  const double cs = std::cos(theta), sn = std::sin(theta);
  const double center = (static_cast<double>(n) - 1.0) / 2.0;
  auto sample = [&](std::ptrdiff_t x, std::ptrdiff_t y, std::size_t c) -> double {
    if (x < 0 || y < 0 || x >= static_cast<std::ptrdiff_t>(n) || y >= static_cast<std::ptrdiff_t>(n)) return 0.0;
    return flipped.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y), c);
  };
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t yy = 0; yy < static_cast<std::ptrdiff_t>(n); ++yy) {
    for (std::size_t x = 0; x < n; ++x) {
      // inverse-map each output pixel into the source
      const double dx = static_cast<double>(x) - center, dy = static_cast<double>(yy) - center;
      const double sx = cs * dx + sn * dy + center;
      const double sy = -sn * dx + cs * dy + center;
      const double fx = std::floor(sx), fy = std::floor(sy);
      const double ax = sx - fx, ay = sy - fy;
      const auto x0 = static_cast<std::ptrdiff_t>(fx), y0 = static_cast<std::ptrdiff_t>(fy);
      for (std::size_t c = 0; c < 3; ++c) {
        const double v = (1 - ay) * ((1 - ax) * sample(x0, y0, c) + ax * sample(x0 + 1, y0, c)) +
                         ay * ((1 - ax) * sample(x0, y0 + 1, c) + ax * sample(x0 + 1, y0 + 1, c));
        out.at(x, static_cast<std::size_t>(yy), c) = static_cast<float>(v);
      }
    }
  }
  return out;
}

ModelTensor augment_chip(const ModelTensor& t, std::uint64_t seed) {
  if (t.values.size() != kTensorSize * kTensorSize * 3) throw std::invalid_argument("tensor has the wrong shape");
  ModelTensor out = apply_augment(t, augment_params(seed));
  out.seed = seed;
  return out;
}

void write_chip_png(const ImageChip& chip, const fs::path& path) {
  chip.validate();
  PngImage img{chip.width, chip.height, 4, std::vector<std::uint8_t>(chip.width * chip.height * 4)};
  for (std::size_t i = 0; i < chip.width * chip.height; ++i) {
    std::copy_n(&chip.pixels[i * 3], 3, &img.data[i * 4]);
    img.data[i * 4 + 3] = chip.pad_mask[i] ? 0 : 255;
  }
  write_png(img, path);
}

ImageChip read_chip_png(const fs::path& path, const std::string& building_id) {
  const PngImage img = read_png(path);
  ImageChip chip;
  chip.building_id = building_id;
  chip.width = img.width;
  chip.height = img.height;
  chip.pixels.resize(img.width * img.height * 3);
  chip.pad_mask.assign(img.width * img.height, false);
  for (std::size_t i = 0; i < img.width * img.height; ++i) {
    if (img.channels == 1) {
      std::fill_n(&chip.pixels[i * 3], 3, img.data[i]);
    } else {
      std::copy_n(&img.data[i * img.channels], 3, &chip.pixels[i * 3]);
      if (img.channels == 4) chip.pad_mask[i] = img.data[i * 4 + 3] == 0;
    }
  }
  chip.source.width = img.width;
  chip.source.height = img.height;
  return chip;
}

ChipRecord chip_record(const ImageChip& chip) {
  return {chip.building_id, chip.source.raster_id, chip.source.col0, chip.source.row0, chip.width, chip.height,
          chip.pad_fraction(), chip.quality_flag, chip.tile_id};
}

std::vector<ChipRecord> read_chip_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open chip manifest " + path.string());
  std::vector<ChipRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto j = nlohmann::json::parse(line);
    ChipRecord r;
    r.building_id = j.at("building_id").get<std::string>();
    r.raster_id = j.value("raster_id", "");
    if (j.contains("window")) {
      const auto& w = j["window"];
      r.col0 = w.at(0).get<std::int64_t>();
      r.row0 = w.at(1).get<std::int64_t>();
      r.width = w.at(2).get<std::size_t>();
      r.height = w.at(3).get<std::size_t>();
    }
    r.pad_fraction = j.value("pad_fraction", 0.0);
    r.quality_flag = quality_flag_from(j.value("quality_flag", "ok"));
    r.tile_id = j.value("tile_id", "");
    out.push_back(std::move(r));
  }
  return out;
}

void write_chip_manifest(const std::vector<ChipRecord>& records, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write chip manifest " + path.string());
  for (const auto& r : records) {
    nlohmann::ordered_json j;
    j["building_id"] = r.building_id;
    j["raster_id"] = r.raster_id;
    j["window"] = {r.col0, r.row0, r.width, r.height};
    j["pad_fraction"] = r.pad_fraction;
    j["quality_flag"] = to_string(r.quality_flag);
    if (!r.tile_id.empty()) j["tile_id"] = r.tile_id;
    out << j.dump() << "\n";
  }
}

}  // namespace rooftop
