#include <cmath>
#include <queue>
#include <set>

#include "doctest.h"
#include "rooftop/canny.hpp"
#include "rooftop/kernels.hpp"
#include "rooftop/rng.hpp"
#include "rooftop/testkit.hpp"

using namespace rooftop;

namespace {

std::vector<std::uint8_t> gray_image(std::size_t w, std::size_t h, auto fn) {
  std::vector<std::uint8_t> rgb(w * h * 3);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      const auto v = static_cast<std::uint8_t>(fn(x, y));
      for (std::size_t c = 0; c < 3; ++c) rgb[(y * w + x) * 3 + c] = v;
    }
  return rgb;
}

ImageChip chip_from(const std::vector<std::uint8_t>& rgb, std::size_t w, std::size_t h) {
  ImageChip c;
  c.building_id = "t";
  c.width = w;
  c.height = h;
  c.pixels = rgb;
  c.pad_mask.assign(w * h, false);
  return c;
}

// Second implementation written from the textbook description: float luma,
// direct 2-D Gaussian, Sobel, slope-ratio direction bins, BFS hysteresis.
std::size_t reference_canny_count(const std::vector<std::uint8_t>& rgb, long w, long h, double sigma, double lo,
                                  double hi) {
  std::vector<double> g(static_cast<std::size_t>(w * h));
  for (long i = 0; i < w * h; ++i) g[i] = 0.299 * rgb[3 * i] + 0.587 * rgb[3 * i + 1] + 0.114 * rgb[3 * i + 2];
  const long r = static_cast<long>(std::ceil(3 * sigma));
  auto cl = [](long v, long n) { return std::max(0L, std::min(v, n - 1)); };
  std::vector<double> b(g.size());
  for (long y = 0; y < h; ++y)
    for (long x = 0; x < w; ++x) {
      double s = 0, ws = 0;
      for (long dy = -r; dy <= r; ++dy)
        for (long dx = -r; dx <= r; ++dx) {
          const double k = std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma));
          s += k * g[cl(y + dy, h) * w + cl(x + dx, w)];
          ws += k;
        }
      b[y * w + x] = s / ws;
    }
  auto B = [&](long x, long y) { return b[cl(y, h) * w + cl(x, w)]; };
  std::vector<double> mag(g.size()), gxs(g.size()), gys(g.size());
  double gmax = 0;
  for (long y = 0; y < h; ++y)
    for (long x = 0; x < w; ++x) {
      const double gx = B(x + 1, y - 1) + 2 * B(x + 1, y) + B(x + 1, y + 1) - B(x - 1, y - 1) - 2 * B(x - 1, y) -
                        B(x - 1, y + 1);
      const double gy = B(x - 1, y + 1) + 2 * B(x, y + 1) + B(x + 1, y + 1) - B(x - 1, y - 1) - 2 * B(x, y - 1) -
                        B(x + 1, y - 1);
      gxs[y * w + x] = gx;
      gys[y * w + x] = gy;
      mag[y * w + x] = std::sqrt(gx * gx + gy * gy);
      gmax = std::max(gmax, mag[y * w + x]);
    }
  if (gmax == 0) return 0;
  auto M = [&](long x, long y) { return (x < 0 || y < 0 || x >= w || y >= h) ? 0.0 : mag[y * w + x]; };
  const double t22 = std::tan(M_PI / 8), t67 = std::tan(3 * M_PI / 8);
  std::vector<int> state(g.size(), 0);
  for (long y = 0; y < h; ++y)
    for (long x = 0; x < w; ++x) {
      const double m = mag[y * w + x];
      if (m < lo * gmax || m == 0) continue;
      const double gx = gxs[y * w + x], gy = gys[y * w + x];
      long ox, oy;
      const double ax = std::abs(gx), ay = std::abs(gy);
      if (ay <= t22 * ax) ox = 1, oy = 0;
      else if (ay >= t67 * ax) ox = 0, oy = 1;
      else if ((gx > 0) == (gy > 0)) ox = 1, oy = 1;
      else ox = -1, oy = 1;
      if (m >= M(x + ox, y + oy) && m > M(x - ox, y - oy)) state[y * w + x] = m >= hi * gmax ? 2 : 1;
    }
  std::vector<bool> edge(g.size(), false);
  std::queue<long> q;
  for (long i = 0; i < w * h; ++i)
    if (state[i] == 2) edge[i] = true, q.push(i);
  while (!q.empty()) {
    const long i = q.front();
    q.pop();
    for (long dy = -1; dy <= 1; ++dy)
      for (long dx = -1; dx <= 1; ++dx) {
        const long nx = i % w + dx, ny = i / w + dy;
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
        if (state[ny * w + nx] == 1 && !edge[ny * w + nx]) edge[ny * w + nx] = true, q.push(ny * w + nx);
      }
  }
  return static_cast<std::size_t>(std::count(edge.begin(), edge.end(), true));
}

}  // namespace

TEST_CASE("constant image has no edges") {
  const auto img = gray_image(32, 32, [](auto, auto) { return 128; });
  const auto e = canny_edges(img, 32, 32);
  CHECK(e.count() == 0);
  CHECK(edge_density(e) == 0.0);
}

TEST_CASE("vertical step gives one 1-pixel line next to the step") {
  for (std::size_t step : {8u, 16u, 23u}) {
    const auto img = gray_image(32, 32, [&](auto x, auto) { return x < step ? 0 : 255; });
    const auto e = canny_edges(img, 32, 32);
    for (std::size_t y = 0; y < 32; ++y) {
      std::size_t in_row = 0, col = 0;
      for (std::size_t x = 0; x < 32; ++x)
        if (e.mask[y * 32 + x]) ++in_row, col = x;
      CHECK(in_row == 1);
      CHECK(std::abs(static_cast<long>(col) - static_cast<long>(step)) <= 1);
    }
  }
}

TEST_CASE("checkerboard edge count agrees with an independent reference") {
  for (std::size_t side : {64u, 96u}) {
    const auto img = gray_image(side, side, [](auto x, auto y) { return ((x / 8) + (y / 8)) % 2 ? 230 : 20; });
    const CannyParams p;
    const double ours = static_cast<double>(canny_edges(img, side, side, p).count());
    const double ref = static_cast<double>(reference_canny_count(img, static_cast<long>(side), static_cast<long>(side),
                                                                 p.sigma, p.low_frac, p.high_frac));
    REQUIRE(ref > 0);
    CHECK(std::abs(ours - ref) / ref <= 0.05);
  }
}

TEST_CASE("random textures agree with the reference within 5%") {
  Rng rng(3);
  for (int trial = 0; trial < 3; ++trial) {
    std::vector<std::uint8_t> blocks(16 * 16);
    for (auto& v : blocks) v = static_cast<std::uint8_t>(rng.below(256));
    const auto img = gray_image(64, 64, [&](auto x, auto y) { return blocks[(y / 4) * 16 + x / 4]; });
    const CannyParams p;
    const double ours = static_cast<double>(canny_edges(img, 64, 64, p).count());
    const double ref = static_cast<double>(reference_canny_count(img, 64, 64, p.sigma, p.low_frac, p.high_frac));
    CHECK(std::abs(ours - ref) / ref <= 0.05);
  }
}

TEST_CASE("edge density") {
  EdgeMap e{10, 10, std::vector<bool>(100, false), {}};
  CHECK(edge_density(e) == 0.0);
  for (int i = 0; i < 7; ++i) e.mask[i * 13] = true;
  CHECK(edge_density(e) == doctest::Approx(0.07));
  std::fill(e.mask.begin(), e.mask.end(), true);
  CHECK(edge_density(e) == 1.0);
}

TEST_CASE("argument checks") {
  const auto tiny = gray_image(4, 4, [](auto, auto) { return 0; });
  CHECK_THROWS(canny_edges(tiny, 4, 4));
  const auto img = gray_image(8, 8, [](auto, auto) { return 0; });
  CHECK_THROWS(canny_edges(img, 8, 8, {1.4, 0.3, 0.1}));
  CHECK_THROWS(canny_edges(img, 8, 8, {1.4, 0.0, 0.3}));
}

TEST_CASE("uniform brightness shift leaves the mask unchanged") {
  Rng rng(11);
  std::vector<std::uint8_t> base(48 * 48 * 3);
  for (auto& v : base) v = static_cast<std::uint8_t>(rng.below(200));
  std::vector<std::uint8_t> shifted = base;
  for (auto& v : shifted) v = static_cast<std::uint8_t>(v + 40);
  CHECK(canny_edges(base, 48, 48).mask == canny_edges(shifted, 48, 48).mask);
}

TEST_CASE("raising high_frac never adds edges") {
  Rng rng(12);
  std::vector<std::uint8_t> img(40 * 40 * 3);
  for (auto& v : img) v = static_cast<std::uint8_t>(rng.below(256));
  std::size_t prev = SIZE_MAX;
  for (double hi : {0.15, 0.2, 0.3, 0.5, 0.8, 1.0}) {
    const std::size_t n = canny_edges(img, 40, 40, {1.4, 0.1, hi}).count();
    CHECK(n <= prev);
    prev = n;
  }
}

TEST_CASE("flagging") {
  const auto white = chip_from(gray_image(40, 40, [](auto, auto) { return 255; }), 40, 40);
  const auto roof = chip_from(gray_image(40, 40, [](auto x, auto y) { return ((x / 4) + (y / 3)) % 2 ? 200 : 60; }), 40, 40);
  CHECK(flag_obscured(white).quality_flag == QualityFlag::obscured);
  CHECK(flag_obscured(roof).quality_flag == QualityFlag::ok);
  CHECK(chip_edge_density(roof) > 10 * kObscuredThreshold);
  CHECK(flag_obscured(white, 0.0).quality_flag == QualityFlag::ok);
  const auto twice = flag_obscured(flag_obscured(roof));
  CHECK(twice.quality_flag == QualityFlag::ok);
  CHECK(twice.pixels == roof.pixels);
  CHECK_THROWS(flag_obscured(roof, 1.5));
}

TEST_CASE("padding does not count as edges or as area") {
  // textured left half, padded (black) right half
  auto c = chip_from(gray_image(40, 40, [](auto x, auto y) { return x >= 20 ? 0 : (((x / 4) + (y / 3)) % 2 ? 200 : 60); }),
                     40, 40);
  for (std::size_t y = 0; y < 40; ++y)
    for (std::size_t x = 20; x < 40; ++x) c.pad_mask[y * 40 + x] = true;
  auto cropped = chip_from(gray_image(20, 40, [](auto x, auto y) { return ((x / 4) + (y / 3)) % 2 ? 200 : 60; }), 20, 40);
  // the seam at the pad boundary must not register
  CHECK(chip_edge_density(c) == doctest::Approx(chip_edge_density(cropped)).epsilon(0.15));

  auto cloud = chip_from(gray_image(40, 40, [](auto x, auto) { return x >= 20 ? 0 : 255; }), 40, 40);
  cloud.pad_mask = c.pad_mask;
  CHECK(flag_obscured(cloud).quality_flag == QualityFlag::obscured);

  std::fill(c.pad_mask.begin(), c.pad_mask.end(), true);
  CHECK_THROWS(flag_obscured(c));
}

TEST_CASE("fixture chips: clouds flagged, roofs kept") {
  FixtureSpec spec;
  spec.buildings = 60;
  spec.embedding_dim = 8;
  const Fixture f = generate_fixture(spec);
  std::set<std::string> clouds(f.cloud_ids.begin(), f.cloud_ids.end());
  REQUIRE(clouds.size() == spec.clouds);
  for (const auto& fp : f.footprints) {
    const auto flagged = flag_obscured(extract_chip(f.raster, fp));
    CHECK_MESSAGE((flagged.quality_flag == QualityFlag::obscured) == (clouds.count(fp.id) == 1), fp.id);
  }
}

TEST_CASE("separable blur matches the direct 2-D reference") {
  kernels::ImageF img(41, 29, 1);
  Rng rng(6);
  for (auto& v : img.v) v = rng.uniform(0, 255);
  for (double sigma : {0.8, 1.4, 2.5}) {
    const auto a = kernels::gaussian_blur(img, sigma), b = kernels::gaussian_blur_serial(img, sigma);
    double worst = 0;
    for (std::size_t i = 0; i < a.v.size(); ++i) worst = std::max(worst, std::abs(a.v[i] - b.v[i]));
    CHECK(worst < 1e-9);
  }
  const auto taps = kernels::gaussian_taps(1.4);
  CHECK(taps.size() == 2 * 5 + 1);
  double s = 0;
  for (double t : taps) s += t;
  CHECK(s == doctest::Approx(1.0));
}
