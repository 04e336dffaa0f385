#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace ocrpipe {

/// Row-major dense 2-D grid, indexed (row, column) = (y, x).
template <typename Scalar>
using Raster = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Raster8 = Raster<std::uint8_t>;
using RasterD = Raster<double>;

/// Maps an arbitrary index onto [0, n) by symmetric reflection
/// (d c b a | a b c d | d c b a), repeating as often as needed.
inline Eigen::Index reflect_index(Eigen::Index i, Eigen::Index n) {
  if (n == 1) return 0;
  const Eigen::Index period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

/// Sampled Gaussian of the given stddev over [-radius, radius], normalized to sum 1.
template <typename Scalar>
std::vector<Scalar> gaussian_kernel(Scalar sigma, int radius) {
  std::vector<Scalar> k(static_cast<std::size_t>(2 * radius + 1));
  Scalar sum = 0;
  for (int i = -radius; i <= radius; ++i) {
    const Scalar v = std::exp(-Scalar(i) * Scalar(i) / (Scalar(2) * sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = v;
    sum += v;
  }
  for (auto& v : k) v /= sum;
  return k;
}

/// Kernel radius used by gaussian_blur: four standard deviations.
template <typename Scalar>
int gaussian_radius(Scalar sigma) {
  return std::max(1, static_cast<int>(std::ceil(Scalar(4) * sigma)));
}

/// Separable Gaussian filter with reflecting boundaries.
template <typename Scalar>
Raster<Scalar> gaussian_blur(const Raster<Scalar>& in, Scalar sigma) {
  if (sigma <= Scalar(0)) return in;
  const int radius = gaussian_radius(sigma);
  const auto kernel = gaussian_kernel(sigma, radius);
  const Eigen::Index h = in.rows(), w = in.cols();

  Raster<Scalar> tmp(h, w);
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      Scalar acc = 0;
      for (int d = -radius; d <= radius; ++d) {
        acc += kernel[static_cast<std::size_t>(d + radius)] * in(y, reflect_index(x + d, w));
      }
      tmp(y, x) = acc;
    }
  }
  Raster<Scalar> out(h, w);
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      Scalar acc = 0;
      for (int d = -radius; d <= radius; ++d) {
        acc += kernel[static_cast<std::size_t>(d + radius)] * tmp(reflect_index(y + d, h), x);
      }
      out(y, x) = acc;
    }
  }
  return out;
}

/// Bilinear sample at a continuous (y, x) position; coordinates are clamped
/// to the raster bounds first.
template <typename Derived, typename Scalar>
Scalar sample_bilinear(const Eigen::ArrayBase<Derived>& img, Scalar y, Scalar x) {
  const Scalar ymax = Scalar(img.rows() - 1), xmax = Scalar(img.cols() - 1);
  y = std::clamp(y, Scalar(0), ymax);
  x = std::clamp(x, Scalar(0), xmax);
  const auto y0 = static_cast<Eigen::Index>(std::floor(y));
  const auto x0 = static_cast<Eigen::Index>(std::floor(x));
  const Eigen::Index y1 = std::min<Eigen::Index>(y0 + 1, img.rows() - 1);
  const Eigen::Index x1 = std::min<Eigen::Index>(x0 + 1, img.cols() - 1);
  const Scalar fy = y - Scalar(y0), fx = x - Scalar(x0);
  const Scalar top = Scalar(img(y0, x0)) * (1 - fx) + Scalar(img(y0, x1)) * fx;
  const Scalar bottom = Scalar(img(y1, x0)) * (1 - fx) + Scalar(img(y1, x1)) * fx;
  return top * (1 - fy) + bottom * fy;
}

/// Rounds to nearest and saturates into [0, 255].
template <typename Derived>
Raster8 to_u8(const Eigen::ArrayBase<Derived>& values) {
  return values.round().max(0.0).min(255.0).template cast<std::uint8_t>();
}

/// 256-bin intensity histogram.
std::vector<std::size_t> histogram(const Raster8& img);

/// Brightness quantile with the "lower" convention: the value at index
/// floor(q * (n - 1)) of the ascending-sorted pixels.
std::uint8_t quantile(const Raster8& img, double q);

}  // namespace ocrpipe
