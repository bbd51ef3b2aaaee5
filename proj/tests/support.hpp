#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "rooftop/matrix.hpp"
#include "rooftop/rng.hpp"

namespace testsupport {

/// Two isotropic Gaussian blobs whose centers are `margin` sigmas apart.
inline void two_blobs(std::size_t n, double margin, std::uint64_t seed, rooftop::Matrix& X, std::vector<int>& y) {
  rooftop::Rng rng(seed);
  X = rooftop::Matrix(n, 2);
  y.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = static_cast<int>(i % 2);
    const double c = y[i] ? margin / 2 : -margin / 2;
    X(i, 0) = c + rng.normal();
    X(i, 1) = rng.normal();
  }
}

/// Four tight clusters at (+-1, +-1); class = sign(x) xor sign(y).
inline void xor_clusters(std::size_t n, double spread, std::uint64_t seed, rooftop::Matrix& X, std::vector<int>& y) {
  rooftop::Rng rng(seed);
  X = rooftop::Matrix(n, 2);
  y.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const int q = static_cast<int>(i % 4);
    const double cx = (q & 1) ? 1.0 : -1.0, cy = (q & 2) ? 1.0 : -1.0;
    X(i, 0) = cx + spread * rng.normal();
    X(i, 1) = cy + spread * rng.normal();
    y[i] = ((q & 1) != 0) != ((q & 2) != 0) ? 1 : 0;
  }
}

inline rooftop::Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed, double scale = 1.0) {
  rooftop::Rng rng(seed);
  rooftop::Matrix m(r, c);
  for (double& v : m.data) v = scale * rng.normal();
  return m;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("rooftop_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max({1e-8, std::abs(a), std::abs(b)}); }

}  // namespace testsupport
