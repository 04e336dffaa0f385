#pragma once

#include <cstddef>
#include <vector>

namespace ocrpipe {

struct SampleStats {
  double mu = 0.0;
  double sigma = 0.0;  // sample stddev, n - 1 denominator
  double min = 0.0;
  std::size_t n = 0;
  bool sigma_defined = false;  // false for n = 1, where sigma is reported as 0
};

/// Throws std::invalid_argument on an empty sample.
SampleStats sample_stats(const std::vector<double>& values);

/// Inverse of the standard normal CDF, p in (0, 1).
double normal_quantile(double p);

/// Replicates needed to resolve a CER difference d given run-to-run stddev
/// sigma: ceil((z * sigma / d)^2) with z the two-sided quantile for
/// `confidence`, at least 1.
std::size_t required_sample_size(double sigma, double d, double confidence = 0.95);

}  // namespace ocrpipe
