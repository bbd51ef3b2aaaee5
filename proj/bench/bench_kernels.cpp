// Serial reference vs OpenMP kernel timings. Each row also reports the
// largest difference between the two outputs.
#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>

#include "CLI11.hpp"
#include "rooftop/kernels.hpp"
#include "rooftop/rng.hpp"

using namespace rooftop;
using Clock = std::chrono::steady_clock;

namespace {

double best_of(int reps, const std::function<void()>& f) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = Clock::now();
    f();
    best = std::min(best, std::chrono::duration<double>(Clock::now() - t0).count());
  }
  return best;
}

void row(const char* name, double serial, double parallel, double diff) {
  std::printf("%-18s %10.2f ms %10.2f ms %8.2fx   max|diff| %.2g\n", name, serial * 1e3, parallel * 1e3,
              serial / parallel, diff);
}

kernels::ImageF random_image(Rng& rng, std::size_t w, std::size_t h, std::size_t c) {
  kernels::ImageF img(w, h, c);
  for (auto& v : img.v) v = rng.uniform();
  return img;
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kernel benchmark: serial vs OpenMP"};
  int reps = 5;
  std::size_t image = 1024, rows = 100000, dim = 256;
  app.add_option("--reps", reps);
  app.add_option("--image", image, "square image side for the image kernels");
  app.add_option("--rows", rows, "index rows for cosine scores");
  app.add_option("--dim", dim, "embedding dimension for cosine scores");
  CLI11_PARSE(app, argc, argv);

  Rng rng(1);
  std::printf("threads %d\n%-18s %13s %13s %9s\n", omp_get_max_threads(), "kernel", "serial", "openmp", "speedup");

  {
    const auto img = random_image(rng, image, image, 3);
    kernels::ImageF a, b;
    const double s = best_of(reps, [&] { a = kernels::gaussian_blur_serial(img, 1.4); });
    const double p = best_of(reps, [&] { b = kernels::gaussian_blur(img, 1.4); });
    row("gaussian_blur", s, p, max_diff(a.v, b.v));
  }
  {
    std::vector<std::uint8_t> src(image * image * 3);
    for (auto& v : src) v = static_cast<std::uint8_t>(rng.below(256));
    const double factor = 2.5;
    const auto ow = static_cast<std::size_t>(std::lround(image / factor));
    std::vector<std::uint8_t> a, b;
    const double s = best_of(reps, [&] {
      a = kernels::area_downsample_serial(src, image, image, 3, factor, ow, ow, std::uint8_t{0});
    });
    const double p =
        best_of(reps, [&] { b = kernels::area_downsample(src, image, image, 3, factor, ow, ow, std::uint8_t{0}); });
    int d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(int(a[i]) - int(b[i])));
    row("area_downsample", s, p, d);
  }
  {
    const auto img = random_image(rng, image / 2, image / 3, 3);
    kernels::ImageF a, b;
    const double s = best_of(reps, [&] { a = kernels::bilinear_resize_serial(img, image, image); });
    const double p = best_of(reps, [&] { b = kernels::bilinear_resize(img, image, image); });
    row("bilinear_resize", s, p, max_diff(a.v, b.v));
  }
  {
    std::vector<float> m(rows * dim);
    for (auto& v : m) v = static_cast<float>(rng.normal());
    std::vector<double> norms(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      double sq = 0;
      for (std::size_t j = 0; j < dim; ++j) sq += double(m[r * dim + j]) * m[r * dim + j];
      norms[r] = std::sqrt(sq);
    }
    const std::span<const float> q(m.data(), dim);
    std::vector<double> a(rows), b(rows);
    const double s = best_of(reps, [&] { kernels::cosine_scores_serial(m, dim, norms, q, norms[0], a); });
    const double p = best_of(reps, [&] { kernels::cosine_scores(m, dim, norms, q, norms[0], b); });
    row("cosine_scores", s, p, max_diff(a, b));
  }
  return 0;
}
