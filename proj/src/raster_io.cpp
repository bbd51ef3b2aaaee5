#include "rooftop/raster_io.hpp"

#include <png.h>

#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"
#include "tiff.hpp"

namespace rooftop {
namespace fs = std::filesystem;
using Kind = RasterError::Kind;

namespace {

std::vector<std::uint8_t> slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RasterError(Kind::unreadable, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool has_png_magic(const std::vector<std::uint8_t>& b) {
  static constexpr std::array<std::uint8_t, 8> sig = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  return b.size() >= 8 && std::equal(sig.begin(), sig.end(), b.begin());
}

PngImage decode_png(const std::vector<std::uint8_t>& bytes, const std::string& name) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) {
    throw RasterError(Kind::unreadable, "cannot decode PNG " + name + ": " + img.message);
  }
  PngImage out;
  const bool color = (img.format & PNG_FORMAT_FLAG_COLOR) != 0;
  const bool alpha = (img.format & PNG_FORMAT_FLAG_ALPHA) != 0;
  if (color) {
    img.format = alpha ? PNG_FORMAT_RGBA : PNG_FORMAT_RGB;
    out.channels = alpha ? 4 : 3;
  } else {
    img.format = alpha ? PNG_FORMAT_GA : PNG_FORMAT_GRAY;
    out.channels = alpha ? 2 : 1;
  }
  out.width = img.width;
  out.height = img.height;
  out.data.resize(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, out.data.data(), 0, nullptr)) {
    png_image_free(&img);
    throw RasterError(Kind::unreadable, "cannot decode PNG " + name + ": " + img.message);
  }
  if (out.channels == 2) {
    // gray+alpha is widened to RGBA so callers only see 1, 3 or 4 channels
    std::vector<std::uint8_t> rgba(out.width * out.height * 4);
    for (std::size_t i = 0; i < out.width * out.height; ++i) {
      rgba[4 * i] = rgba[4 * i + 1] = rgba[4 * i + 2] = out.data[2 * i];
      rgba[4 * i + 3] = out.data[2 * i + 1];
    }
    out.data = std::move(rgba);
    out.channels = 4;
  }
  return out;
}

}  // namespace

PngImage read_png(const fs::path& path) { return decode_png(slurp(path), path.string()); }

void write_png(const PngImage& image, const fs::path& path) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width);
  img.height = static_cast<png_uint_32>(image.height);
  switch (image.channels) {
    case 1: img.format = PNG_FORMAT_GRAY; break;
    case 3: img.format = PNG_FORMAT_RGB; break;
    case 4: img.format = PNG_FORMAT_RGBA; break;
    default: throw RasterError(Kind::unsupported, "PNG writer needs 1, 3 or 4 channels");
  }
  if (image.data.size() != image.width * image.height * image.channels) {
    throw RasterError(Kind::invalid, "PNG buffer size mismatch");
  }
  if (!png_image_write_to_file(&img, path.c_str(), 0, image.data.data(), 0, nullptr)) {
    throw RasterError(Kind::unreadable, "cannot write PNG " + path.string() + ": " + img.message);
  }
}

GeoTransform read_world_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw RasterError(Kind::unreadable, "cannot open world file " + path.string());
  std::array<double, 6> v{};
  for (double& x : v) {
    if (!(in >> x)) throw RasterError(Kind::no_georef, "malformed world file " + path.string());
  }
  if (v[1] != 0.0 || v[2] != 0.0) {
    throw RasterError(Kind::unsupported, "rotated world files are not supported");
  }
  GeoTransform t;
  t.pixel_w = v[0];
  t.pixel_h = v[3];
  t.origin_x = v[4] - 0.5 * v[0];
  t.origin_y = v[5] - 0.5 * v[3];
  t.validate();
  return t;
}

void write_world_file(const GeoTransform& t, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw RasterError(Kind::unreadable, "cannot write world file " + path.string());
  out << std::setprecision(17) << t.pixel_w << "\n0\n0\n" << t.pixel_h << "\n"
      << t.origin_x + 0.5 * t.pixel_w << "\n" << t.origin_y + 0.5 * t.pixel_h << "\n";
}

std::optional<fs::path> find_world_file(const fs::path& image) {
  std::string ext = image.extension().string();
  for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  std::vector<std::string> candidates;
  if (ext.size() >= 3) {
    // .png -> .pgw, .tif -> .tfw
    candidates.push_back(std::string(".") + ext[1] + ext.back() + "w");
  }
  candidates.push_back(ext + "w");
  candidates.push_back(".wld");
  for (const auto& c : candidates) {
    fs::path p = image;
    p.replace_extension(c);
    if (fs::exists(p)) return p;
  }
  return std::nullopt;
}

GeoRaster read_raster(const fs::path& path, std::size_t bands) {
  const auto bytes = slurp(path);
  GeoRaster r;
  bool georeferenced = false;
  if (tiff::has_tiff_magic(bytes)) {
    auto decoded = tiff::decode(bytes);
    r = std::move(decoded.raster);
    georeferenced = decoded.georeferenced;
  } else if (has_png_magic(bytes)) {
    PngImage img = decode_png(bytes, path.string());
    if (img.channels == 4) {
      // alpha is dropped; fully transparent pixels are not treated as nodata
      std::vector<std::uint8_t> rgb(img.width * img.height * 3);
      for (std::size_t i = 0; i < img.width * img.height; ++i) {
        std::copy_n(&img.data[4 * i], 3, &rgb[3 * i]);
      }
      img.data = std::move(rgb);
      img.channels = 3;
    }
    r.width = img.width;
    r.height = img.height;
    r.bands = img.channels;
    r.data = std::move(img.data);
  } else {
    throw RasterError(Kind::unsupported, "unrecognized image format: " + path.string());
  }

  if (!georeferenced) {
    auto wf = find_world_file(path);
    if (!wf) throw RasterError(Kind::no_georef, "no georeferencing for " + path.string());
    std::string crs = r.transform.crs_id;
    r.transform = read_world_file(*wf);
    r.transform.crs_id = crs;
  }
  r.id = path.stem().string();
  r.validate();
  if (bands != 0) r = expand_bands(r, bands);
  return r;
}

void write_png_raster(const GeoRaster& raster, const fs::path& path) {
  raster.validate();
  write_png(PngImage{raster.width, raster.height, raster.bands, raster.data}, path);
  fs::path wf = path;
  wf.replace_extension(".pgw");
  write_world_file(raster.transform, wf);
}

void write_geotiff(const GeoRaster& raster, const fs::path& path, TiffCompression compression,
                   std::size_t rows_per_strip) {
  const auto bytes = tiff::encode(raster, compression, rows_per_strip);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RasterError(Kind::unreadable, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<MosaicInput> read_mosaic_manifest(const fs::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw RasterError(Kind::unreadable, "cannot open manifest " + manifest.string());
  std::vector<MosaicInput> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw RasterError(Kind::invalid, "manifest line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!j.contains("path") || !j["path"].is_string()) {
      throw RasterError(Kind::invalid, "manifest line " + std::to_string(lineno) + " lacks a path");
    }
    MosaicInput entry;
    entry.path = j["path"].get<std::string>();
    if (entry.path.is_relative()) entry.path = manifest.parent_path() / entry.path;
    if (j.contains("acquired") && j["acquired"].is_string()) {
      entry.acquired = parse_iso_date(j["acquired"].get<std::string>());
      if (!entry.acquired) {
        throw RasterError(Kind::invalid, "manifest line " + std::to_string(lineno) + ": bad acquired date");
      }
    }
    out.push_back(std::move(entry));
  }
  return out;
}

void write_mosaic_manifest(const std::vector<MosaicInput>& inputs, const fs::path& manifest) {
  std::ofstream out(manifest);
  if (!out) throw RasterError(Kind::unreadable, "cannot write manifest " + manifest.string());
  for (const auto& e : inputs) {
    nlohmann::ordered_json j;
    j["path"] = e.path.string();
    if (e.acquired) j["acquired"] = format_iso_date(*e.acquired);
    out << j.dump() << "\n";
  }
}

std::vector<GeoRaster> load_mosaic_inputs(const fs::path& manifest, std::size_t bands) {
  std::vector<GeoRaster> rasters;
  for (const auto& entry : read_mosaic_manifest(manifest)) {
    GeoRaster r = read_raster(entry.path, bands);
    r.acquired = entry.acquired;
    rasters.push_back(std::move(r));
  }
  return rasters;
}

}  // namespace rooftop
