// Baseline TIFF/GeoTIFF codec: 8-bit chunky samples, strips or tiles,
// no compression or deflate (with optional horizontal predictor).

#include "tiff.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstring>
#include <map>
#include <string>

namespace rooftop::tiff {
namespace {

using Kind = RasterError::Kind;

enum Tag : std::uint16_t {
  kImageWidth = 256,
  kImageLength = 257,
  kBitsPerSample = 258,
  kCompression = 259,
  kPhotometric = 262,
  kStripOffsets = 273,
  kSamplesPerPixel = 277,
  kRowsPerStrip = 278,
  kStripByteCounts = 279,
  kPlanarConfig = 284,
  kPredictor = 317,
  kTileWidth = 322,
  kTileLength = 323,
  kTileOffsets = 324,
  kTileByteCounts = 325,
  kModelPixelScale = 33550,
  kModelTiepoint = 33922,
  kModelTransformation = 34264,
  kGeoKeyDirectory = 34735,
  kGdalNodata = 42113,
};

enum Type : std::uint16_t {
  kByte = 1, kAscii = 2, kShort = 3, kLong = 4, kRational = 5, kSByte = 6, kUndefined = 7,
  kSShort = 8, kSLong = 9, kSRational = 10, kFloat = 11, kDouble = 12,
};

std::size_t type_size(std::uint16_t type) {
  switch (type) {
    case kByte: case kAscii: case kSByte: case kUndefined: return 1;
    case kShort: case kSShort: return 2;
    case kLong: case kSLong: case kFloat: return 4;
    case kRational: case kSRational: case kDouble: return 8;
    default: return 0;
  }
}

struct Entry {
  std::uint16_t type = 0;
  std::uint32_t count = 0;
  std::size_t data_offset = 0;  // absolute offset of the value bytes
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : b_(bytes) {
    little_ = b_[0] == 'I';
  }

  std::uint16_t u16(std::size_t off) const {
    check(off, 2);
    return little_ ? static_cast<std::uint16_t>(b_[off] | (b_[off + 1] << 8))
                   : static_cast<std::uint16_t>((b_[off] << 8) | b_[off + 1]);
  }
  std::uint32_t u32(std::size_t off) const {
    check(off, 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      const std::uint32_t byte = b_[off + static_cast<std::size_t>(little_ ? i : 3 - i)];
      v |= byte << (8 * i);
    }
    return v;
  }
  std::uint64_t u64(std::size_t off) const {
    const std::uint64_t lo = u32(off + (little_ ? 0 : 4)), hi = u32(off + (little_ ? 4 : 0));
    return lo | (hi << 32);
  }
  double f64(std::size_t off) const {
    const std::uint64_t bits = u64(off);
    double d;
    std::memcpy(&d, &bits, sizeof d);
    return d;
  }
  float f32(std::size_t off) const {
    const std::uint32_t bits = u32(off);
    float f;
    std::memcpy(&f, &bits, sizeof f);
    return f;
  }

  std::map<std::uint16_t, Entry> read_ifd(std::size_t off) const {
    std::map<std::uint16_t, Entry> ifd;
    const std::uint16_t n = u16(off);
    for (std::uint16_t i = 0; i < n; ++i) {
      const std::size_t e = off + 2 + 12u * i;
      Entry entry;
      const std::uint16_t tag = u16(e);
      entry.type = u16(e + 2);
      entry.count = u32(e + 4);
      const std::size_t bytes = type_size(entry.type) * entry.count;
      entry.data_offset = bytes <= 4 ? e + 8 : u32(e + 8);
      if (type_size(entry.type) == 0) continue;  // unknown types are skipped
      check(entry.data_offset, bytes);
      ifd[tag] = entry;
    }
    return ifd;
  }

  std::vector<double> values(const Entry& e) const {
    std::vector<double> out;
    out.reserve(e.count);
    const std::size_t step = type_size(e.type);
    for (std::uint32_t i = 0; i < e.count; ++i) {
      const std::size_t off = e.data_offset + i * step;
      switch (e.type) {
        case kByte: case kUndefined: out.push_back(b_[off]); break;
        case kSByte: out.push_back(static_cast<std::int8_t>(b_[off])); break;
        case kShort: out.push_back(u16(off)); break;
        case kSShort: out.push_back(static_cast<std::int16_t>(u16(off))); break;
        case kLong: out.push_back(u32(off)); break;
        case kSLong: out.push_back(static_cast<std::int32_t>(u32(off))); break;
        case kRational: out.push_back(static_cast<double>(u32(off)) / u32(off + 4)); break;
        case kSRational:
          out.push_back(static_cast<double>(static_cast<std::int32_t>(u32(off))) /
                        static_cast<std::int32_t>(u32(off + 4)));
          break;
        case kFloat: out.push_back(f32(off)); break;
        case kDouble: out.push_back(f64(off)); break;
        default: break;
      }
    }
    return out;
  }

  std::string ascii(const Entry& e) const {
    std::string s(reinterpret_cast<const char*>(b_.data() + e.data_offset), e.count);
    while (!s.empty() && s.back() == '\0') s.pop_back();
    return s;
  }

  const std::uint8_t* at(std::size_t off, std::size_t len) const {
    check(off, len);
    return b_.data() + off;
  }

 private:
  void check(std::size_t off, std::size_t len) const {
    if (off + len > b_.size() || off + len < off) {
      throw RasterError(Kind::unreadable, "TIFF structure points past end of file");
    }
  }

  const std::vector<std::uint8_t>& b_;
  bool little_ = true;
};

std::vector<std::uint8_t> inflate_exact(const std::uint8_t* src, std::size_t len, std::size_t expected) {
  std::vector<std::uint8_t> out(expected);
  uLongf out_len = static_cast<uLongf>(expected);
  const int rc = uncompress(out.data(), &out_len, src, static_cast<uLong>(len));
  if ((rc != Z_OK && rc != Z_BUF_ERROR) || out_len != expected) {
    throw RasterError(Kind::unreadable, "corrupt deflate block in TIFF");
  }
  return out;
}

void undo_predictor(std::uint8_t* rows, std::size_t nrows, std::size_t row_pixels, std::size_t spp) {
  for (std::size_t r = 0; r < nrows; ++r) {
    std::uint8_t* row = rows + r * row_pixels * spp;
    for (std::size_t i = spp; i < row_pixels * spp; ++i) {
      row[i] = static_cast<std::uint8_t>(row[i] + row[i - spp]);
    }
  }
}

double scalar(const Reader& rd, const std::map<std::uint16_t, Entry>& ifd, std::uint16_t tag, double fallback) {
  auto it = ifd.find(tag);
  if (it == ifd.end()) return fallback;
  auto v = rd.values(it->second);
  return v.empty() ? fallback : v.front();
}

}  // namespace

bool has_tiff_magic(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 8) return false;
  return (bytes[0] == 'I' && bytes[1] == 'I' && bytes[2] == 42 && bytes[3] == 0) ||
         (bytes[0] == 'M' && bytes[1] == 'M' && bytes[2] == 0 && bytes[3] == 42);
}

Decoded decode(const std::vector<std::uint8_t>& bytes) {
  if (!has_tiff_magic(bytes)) {
    throw RasterError(Kind::unsupported, "not a classic TIFF (BigTIFF is not supported)");
  }
  Reader rd(bytes);
  const auto ifd = rd.read_ifd(rd.u32(4));

  const auto width = static_cast<std::size_t>(scalar(rd, ifd, kImageWidth, 0));
  const auto height = static_cast<std::size_t>(scalar(rd, ifd, kImageLength, 0));
  const auto spp = static_cast<std::size_t>(scalar(rd, ifd, kSamplesPerPixel, 1));
  const auto compression = static_cast<int>(scalar(rd, ifd, kCompression, 1));
  const auto planar = static_cast<int>(scalar(rd, ifd, kPlanarConfig, 1));
  const auto predictor = static_cast<int>(scalar(rd, ifd, kPredictor, 1));
  const auto photometric = static_cast<int>(scalar(rd, ifd, kPhotometric, spp == 3 ? 2 : 1));

  if (width == 0 || height == 0) throw RasterError(Kind::unreadable, "TIFF lacks image dimensions");
  if (spp != 1 && spp != 3) {
    throw RasterError(Kind::unsupported, "only 1 or 3 samples per pixel are supported");
  }
  if (auto it = ifd.find(kBitsPerSample); it != ifd.end()) {
    for (double bps : rd.values(it->second)) {
      if (bps != 8) throw RasterError(Kind::unsupported, "only 8-bit samples are supported");
    }
  }
  if (compression != 1 && compression != 8 && compression != 32946) {
    throw RasterError(Kind::unsupported, "unsupported TIFF compression " + std::to_string(compression));
  }
  if (planar != 1) throw RasterError(Kind::unsupported, "planar TIFF layout is not supported");
  if (predictor != 1 && predictor != 2) throw RasterError(Kind::unsupported, "unsupported TIFF predictor");
  if (photometric == 3) throw RasterError(Kind::unsupported, "palette TIFF is not supported");

  Decoded out;
  GeoRaster& r = out.raster;
  r.width = width;
  r.height = height;
  r.bands = spp;
  r.data.assign(width * height * spp, 0);
  const bool deflate = compression != 1;

  auto fetch = [&](std::size_t off, std::size_t len, std::size_t expected) {
    if (deflate) return inflate_exact(rd.at(off, len), len, expected);
    if (len < expected) throw RasterError(Kind::unreadable, "TIFF block shorter than expected");
    const std::uint8_t* p = rd.at(off, expected);
    return std::vector<std::uint8_t>(p, p + expected);
  };

  const bool tiled = ifd.count(kTileOffsets) > 0;
  if (tiled) {
    const auto tw = static_cast<std::size_t>(scalar(rd, ifd, kTileWidth, 0));
    const auto th = static_cast<std::size_t>(scalar(rd, ifd, kTileLength, 0));
    if (tw == 0 || th == 0) throw RasterError(Kind::unreadable, "TIFF tile size missing");
    const auto offsets = rd.values(ifd.at(kTileOffsets));
    const auto counts = rd.values(ifd.at(kTileByteCounts));
    const std::size_t across = (width + tw - 1) / tw, down = (height + th - 1) / th;
    if (offsets.size() < across * down || counts.size() < across * down) {
      throw RasterError(Kind::unreadable, "TIFF tile table too short");
    }
    for (std::size_t ty = 0; ty < down; ++ty) {
      for (std::size_t tx = 0; tx < across; ++tx) {
        const std::size_t t = ty * across + tx;
        auto tile = fetch(static_cast<std::size_t>(offsets[t]), static_cast<std::size_t>(counts[t]), tw * th * spp);
        if (predictor == 2) undo_predictor(tile.data(), th, tw, spp);
        for (std::size_t y = 0; y < th && ty * th + y < height; ++y) {
          const std::size_t cols = std::min(tw, width - tx * tw);
          std::memcpy(&r.data[((ty * th + y) * width + tx * tw) * spp], &tile[y * tw * spp], cols * spp);
        }
      }
    }
  } else {
    if (!ifd.count(kStripOffsets) || !ifd.count(kStripByteCounts)) {
      throw RasterError(Kind::unreadable, "TIFF has neither strips nor tiles");
    }
    const auto rps = static_cast<std::size_t>(std::min<double>(scalar(rd, ifd, kRowsPerStrip, 4294967295.0),
                                                               static_cast<double>(height)));
    const auto offsets = rd.values(ifd.at(kStripOffsets));
    const auto counts = rd.values(ifd.at(kStripByteCounts));
    const std::size_t nstrips = (height + rps - 1) / rps;
    if (offsets.size() < nstrips || counts.size() < nstrips) {
      throw RasterError(Kind::unreadable, "TIFF strip table too short");
    }
    for (std::size_t s = 0; s < nstrips; ++s) {
      const std::size_t rows = std::min(rps, height - s * rps);
      auto strip = fetch(static_cast<std::size_t>(offsets[s]), static_cast<std::size_t>(counts[s]), rows * width * spp);
      if (predictor == 2) undo_predictor(strip.data(), rows, width, spp);
      std::memcpy(&r.data[s * rps * width * spp], strip.data(), rows * width * spp);
    }
  }

  bool pixel_is_point = false;
  if (auto it = ifd.find(kGeoKeyDirectory); it != ifd.end()) {
    const auto keys = rd.values(it->second);
    if (keys.size() >= 4) {
      const auto nkeys = static_cast<std::size_t>(keys[3]);
      for (std::size_t k = 0; k < nkeys && 4 + 4 * k + 3 < keys.size(); ++k) {
        const auto id = static_cast<int>(keys[4 + 4 * k]);
        const auto loc = static_cast<int>(keys[4 + 4 * k + 1]);
        const auto value = static_cast<int>(keys[4 + 4 * k + 3]);
        if (loc != 0) continue;
        if (id == 1025) pixel_is_point = value == 2;
        if ((id == 3072 || id == 2048) && value > 0 && value != 32767 && r.transform.crs_id.empty()) {
          r.transform.crs_id = "EPSG:" + std::to_string(value);
        }
      }
    }
  }

  if (auto it = ifd.find(kModelTransformation); it != ifd.end()) {
    const auto m = rd.values(it->second);
    if (m.size() >= 16) {
      if (m[1] != 0.0 || m[4] != 0.0) {
        throw RasterError(Kind::unsupported, "rotated model transformations are not supported");
      }
      r.transform.origin_x = m[3];
      r.transform.pixel_w = m[0];
      r.transform.origin_y = m[7];
      r.transform.pixel_h = m[5];
      out.georeferenced = true;
    }
  } else if (ifd.count(kModelTiepoint) && ifd.count(kModelPixelScale)) {
    const auto tie = rd.values(ifd.at(kModelTiepoint));
    const auto scale = rd.values(ifd.at(kModelPixelScale));
    if (tie.size() >= 6 && scale.size() >= 2) {
      r.transform.pixel_w = scale[0];
      r.transform.pixel_h = -scale[1];
      r.transform.origin_x = tie[3] - tie[0] * scale[0];
      r.transform.origin_y = tie[4] + tie[1] * scale[1];
      out.georeferenced = true;
    }
  }
  if (out.georeferenced && pixel_is_point) {
    r.transform.origin_x -= 0.5 * r.transform.pixel_w;
    r.transform.origin_y -= 0.5 * r.transform.pixel_h;
  }

  if (auto it = ifd.find(kGdalNodata); it != ifd.end()) {
    try {
      const double v = std::stod(rd.ascii(it->second));
      if (v >= 0 && v <= 255 && v == static_cast<int>(v)) r.nodata = static_cast<std::uint8_t>(v);
    } catch (const std::exception&) {
      // non-numeric nodata is ignored
    }
  }
  return out;
}

namespace {

class Writer {
 public:
  void put16(std::uint16_t v) { buf.push_back(v & 0xff); buf.push_back(v >> 8); }
  void put32(std::uint32_t v) { for (int i = 0; i < 4; ++i) buf.push_back((v >> (8 * i)) & 0xff); }
  void patch32(std::size_t at, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf[at + static_cast<std::size_t>(i)] = (v >> (8 * i)) & 0xff;
  }
  void align() { if (buf.size() % 2) buf.push_back(0); }
  std::vector<std::uint8_t> buf;
};

struct OutEntry {
  std::uint16_t type;
  std::uint32_t count;
  std::vector<std::uint8_t> bytes;  // little-endian payload
};

OutEntry shorts(const std::vector<std::uint16_t>& v) {
  OutEntry e{kShort, static_cast<std::uint32_t>(v.size()), {}};
  for (auto x : v) { e.bytes.push_back(x & 0xff); e.bytes.push_back(x >> 8); }
  return e;
}
OutEntry longs(const std::vector<std::uint32_t>& v) {
  OutEntry e{kLong, static_cast<std::uint32_t>(v.size()), {}};
  for (auto x : v) for (int i = 0; i < 4; ++i) e.bytes.push_back((x >> (8 * i)) & 0xff);
  return e;
}
OutEntry doubles(const std::vector<double>& v) {
  OutEntry e{kDouble, static_cast<std::uint32_t>(v.size()), {}};
  for (double d : v) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, sizeof bits);
    for (int i = 0; i < 8; ++i) e.bytes.push_back((bits >> (8 * i)) & 0xff);
  }
  return e;
}
OutEntry ascii(const std::string& s) {
  OutEntry e{kAscii, static_cast<std::uint32_t>(s.size() + 1), {}};
  e.bytes.assign(s.begin(), s.end());
  e.bytes.push_back(0);
  return e;
}

}  // namespace

std::vector<std::uint8_t> encode(const GeoRaster& r, TiffCompression compression, std::size_t rows_per_strip) {
  r.validate();
  if (r.bands != 1 && r.bands != 3) throw RasterError(Kind::unsupported, "GeoTIFF writer needs 1 or 3 bands");
  rows_per_strip = std::clamp<std::size_t>(rows_per_strip, 1, r.height);

  Writer w;
  w.buf = {'I', 'I', 42, 0, 0, 0, 0, 0};

  std::vector<std::uint32_t> offsets, counts;
  const std::size_t row_bytes = r.width * r.bands;
  for (std::size_t row = 0; row < r.height; row += rows_per_strip) {
    const std::size_t rows = std::min(rows_per_strip, r.height - row);
    const std::uint8_t* src = r.data.data() + row * row_bytes;
    const std::size_t len = rows * row_bytes;
    offsets.push_back(static_cast<std::uint32_t>(w.buf.size()));
    if (compression == TiffCompression::deflate) {
      uLongf clen = compressBound(static_cast<uLong>(len));
      std::vector<std::uint8_t> tmp(clen);
      if (compress2(tmp.data(), &clen, src, static_cast<uLong>(len), Z_DEFAULT_COMPRESSION) != Z_OK) {
        throw RasterError(Kind::invalid, "deflate failed");
      }
      w.buf.insert(w.buf.end(), tmp.begin(), tmp.begin() + static_cast<std::ptrdiff_t>(clen));
      counts.push_back(static_cast<std::uint32_t>(clen));
    } else {
      w.buf.insert(w.buf.end(), src, src + len);
      counts.push_back(static_cast<std::uint32_t>(len));
    }
    w.align();
  }

  const GeoTransform& t = r.transform;
  std::map<std::uint16_t, OutEntry> tags;
  tags[kImageWidth] = longs({static_cast<std::uint32_t>(r.width)});
  tags[kImageLength] = longs({static_cast<std::uint32_t>(r.height)});
  tags[kBitsPerSample] = shorts(std::vector<std::uint16_t>(r.bands, 8));
  tags[kCompression] = shorts({static_cast<std::uint16_t>(compression == TiffCompression::deflate ? 8 : 1)});
  tags[kPhotometric] = shorts({static_cast<std::uint16_t>(r.bands == 3 ? 2 : 1)});
  tags[kStripOffsets] = longs(offsets);
  tags[kSamplesPerPixel] = shorts({static_cast<std::uint16_t>(r.bands)});
  tags[kRowsPerStrip] = longs({static_cast<std::uint32_t>(rows_per_strip)});
  tags[kStripByteCounts] = longs(counts);
  tags[kPlanarConfig] = shorts({1});
  tags[kModelPixelScale] = doubles({t.pixel_w, -t.pixel_h, 0.0});
  tags[kModelTiepoint] = doubles({0, 0, 0, t.origin_x, t.origin_y, 0});
  std::vector<std::uint16_t> keys = {1, 1, 0, 0};
  int epsg = 0;
  if (t.crs_id.rfind("EPSG:", 0) == 0) {
    try { epsg = std::stoi(t.crs_id.substr(5)); } catch (const std::exception&) { epsg = 0; }
  }
  if (epsg > 0 && epsg < 65536) {
    keys.insert(keys.end(), {1024, 0, 1, 1, 1025, 0, 1, 1, 3072, 0, 1, static_cast<std::uint16_t>(epsg)});
    keys[3] = 3;
  } else {
    keys.insert(keys.end(), {1025, 0, 1, 1});
    keys[3] = 1;
  }
  tags[kGeoKeyDirectory] = shorts(keys);
  if (r.nodata) tags[kGdalNodata] = ascii(std::to_string(*r.nodata));

  const std::size_t ifd_off = w.buf.size();
  w.patch32(4, static_cast<std::uint32_t>(ifd_off));
  const std::size_t extra_off = ifd_off + 2 + 12 * tags.size() + 4;
  std::vector<std::uint8_t> extra;
  w.put16(static_cast<std::uint16_t>(tags.size()));
  for (const auto& [tag, e] : tags) {
    w.put16(tag);
    w.put16(e.type);
    w.put32(e.count);
    if (e.bytes.size() <= 4) {
      for (std::size_t i = 0; i < 4; ++i) w.buf.push_back(i < e.bytes.size() ? e.bytes[i] : 0);
    } else {
      w.put32(static_cast<std::uint32_t>(extra_off + extra.size()));
      extra.insert(extra.end(), e.bytes.begin(), e.bytes.end());
      if (extra.size() % 2) extra.push_back(0);
    }
  }
  w.put32(0);
  w.buf.insert(w.buf.end(), extra.begin(), extra.end());
  return std::move(w.buf);
}

}  // namespace rooftop::tiff
