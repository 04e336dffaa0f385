#include "ocrpipe/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace ocrpipe {

SampleStats sample_stats(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("sample_stats: empty sample");
  SampleStats s;
  s.n = values.size();
  s.mu = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(s.n);
  s.min = *std::min_element(values.begin(), values.end());
  if (s.n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mu) * (v - s.mu);
    s.sigma = std::sqrt(ss / static_cast<double>(s.n - 1));
    s.sigma_defined = true;
  }
  return s;
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p must be in (0, 1)");
  // Acklam's rational approximation, then Newton steps on the exact CDF
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01, -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else if (p <= 1 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
  } else {
    const double q = std::sqrt(-2 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  const double inv_sqrt2pi = 0.3989422804014327;
  // upper half: refine against the survival function, 1 - p is exact there
  const bool upper = p > 0.5;
  const double target = upper ? 1.0 - p : p;
  for (int it = 0; it < 3; ++it) {
    const double tail = 0.5 * std::erfc((upper ? x : -x) / std::sqrt(2.0));
    const double pdf = inv_sqrt2pi * std::exp(-0.5 * x * x);
    if (pdf <= 0) break;
    x += (upper ? 1.0 : -1.0) * (tail - target) / pdf;
  }
  return x;
}

std::size_t required_sample_size(double sigma, double d, double confidence) {
  if (!(sigma > 0)) throw std::invalid_argument("required_sample_size: sigma must be > 0");
  if (!(d > 0)) throw std::invalid_argument("required_sample_size: d must be > 0");
  if (!(confidence > 0 && confidence < 1)) {
    throw std::invalid_argument("required_sample_size: confidence must be in (0, 1)");
  }
  const double z = normal_quantile(1.0 - (1.0 - confidence) / 2.0);
  const double ratio = z * sigma / d;
  const double n = std::ceil(ratio * ratio - 1e-9);
  if (!(n >= 1)) return 1;  // also catches d = inf
  if (n >= static_cast<double>(std::numeric_limits<std::size_t>::max())) {
    throw std::overflow_error("required_sample_size: result does not fit");
  }
  return static_cast<std::size_t>(n);
}

}  // namespace ocrpipe
