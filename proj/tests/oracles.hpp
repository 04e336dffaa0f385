#pragma once

// Slow, direct reference implementations. None of them shares code with the
// library beyond the image container.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ocrpipe/lineimg.hpp"

namespace oracle {

// mirror with edge repeat: -1 -> 0, -2 -> 1, n -> n-1
inline long mirror(long i, long n) {
  while (i < 0 || i >= n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - i - 1;
  }
  return i;
}

inline ocrpipe::Raster8 sauvola(const ocrpipe::Raster8& img, int window, double k, double range) {
  const long h = img.rows(), w = img.cols();
  window = std::min<long>(window, std::min(h, w));
  if (window % 2 == 0) --window;
  const long r = window / 2;
  ocrpipe::Raster8 out(h, w);
  for (long y = 0; y < h; ++y) {
    for (long x = 0; x < w; ++x) {
      std::int64_t s1 = 0, s2 = 0;
      for (long dy = -r; dy <= r; ++dy) {
        for (long dx = -r; dx <= r; ++dx) {
          const std::int64_t v = img(mirror(y + dy, h), mirror(x + dx, w));
          s1 += v;
          s2 += v * v;
        }
      }
      const double n = double(window) * double(window);
      const double mean = double(s1) / n;
      const double var = std::max(0.0, double(s2) / n - mean * mean);
      const double t = mean * (1.0 + k * (std::sqrt(var) / range - 1.0));
      out(y, x) = double(img(y, x)) < t ? 0 : 255;
    }
  }
  return out;
}

// Exhaustive threshold scan; class 0 is every pixel < t. Returns -1 when no
// threshold separates two non-empty classes.
inline int otsu_threshold(const ocrpipe::Raster8& img) {
  const double total = double(img.size());
  int best_t = -1;
  double best = -1.0;
  for (int t = 1; t < 256; ++t) {
    std::int64_t n0 = 0, n1 = 0, s0 = 0, s1 = 0;
    for (Eigen::Index i = 0; i < img.size(); ++i) {
      const int v = img.data()[i];
      if (v < t) {
        ++n0;
        s0 += v;
      } else {
        ++n1;
        s1 += v;
      }
    }
    if (n0 == 0 || n1 == 0) continue;
    const double m0 = double(s0) / double(n0), m1 = double(s1) / double(n1);
    const double between = (double(n0) / total) * (double(n1) / total) * (m0 - m1) * (m0 - m1);
    if (between > best) {
      best = between;
      best_t = t;
    }
  }
  return best_t;
}

// Value at floor(q * (n - 1)) of the sorted pixels.
inline int quantile(const ocrpipe::Raster8& img, double q) {
  std::vector<int> v(img.data(), img.data() + img.size());
  std::sort(v.begin(), v.end());
  return v[static_cast<std::size_t>(std::floor(q * double(v.size() - 1)))];
}

// Plain recursion over the three edit choices; only a shared first symbol is
// consumed without branching. Exponential, keep inputs short.
inline std::size_t levenshtein(const std::u32string& a, std::size_t i, const std::u32string& b, std::size_t j) {
  if (i == a.size()) return b.size() - j;
  if (j == b.size()) return a.size() - i;
  if (a[i] == b[j]) return levenshtein(a, i + 1, b, j + 1);
  const std::size_t sub = levenshtein(a, i + 1, b, j + 1);
  const std::size_t del = levenshtein(a, i + 1, b, j);
  const std::size_t ins = levenshtein(a, i, b, j + 1);
  return 1 + std::min({sub, del, ins});
}

inline std::size_t levenshtein(const std::u32string& a, const std::u32string& b) { return levenshtein(a, 0, b, 0); }

struct ArchPoint {
  int height;
  int N;
  double R;
  int K;
  int P;
  std::vector<int> M;
};

// Layer-by-layer parameter count written out from the layer definitions.
inline std::int64_t param_count(const ArchPoint& a, std::int64_t codec) {
  std::vector<std::int64_t> f(a.K);
  f[a.K - 1] = a.N;
  for (int i = a.K - 2; i >= 0; --i) {
    std::int64_t v = static_cast<std::int64_t>(std::floor(double(f[i + 1]) / a.R));
    f[i] = v < 8 ? 8 : v;
  }
  std::int64_t total = 0;
  std::int64_t cin = 1;
  for (int i = 0; i < a.K; ++i) {
    total += 3 * 3 * cin * f[i];  // kernel weights
    total += f[i];                // biases
    cin = f[i];
  }
  std::int64_t rows = a.height;
  for (int p = 0; p < a.P; ++p) rows /= 2;
  std::int64_t features = cin * rows;
  for (int u : a.M) {
    for (int gate = 0; gate < 4; ++gate) {
      total += std::int64_t(u) * features;  // input weights
      total += std::int64_t(u) * u;         // recurrent weights
      total += u;                           // bias
    }
    features = u;
  }
  if (codec > 0) total += features * codec + codec;
  return total;
}

}  // namespace oracle
