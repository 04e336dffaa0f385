#include "ocrpipe/raster.hpp"

#include <stdexcept>

namespace ocrpipe {

std::vector<std::size_t> histogram(const Raster8& img) {
  std::vector<std::size_t> bins(256, 0);
  for (Eigen::Index i = 0; i < img.size(); ++i) ++bins[img.data()[i]];
  return bins;
}

std::uint8_t quantile(const Raster8& img, double q) {
  if (img.size() == 0) throw std::invalid_argument("quantile of an empty raster");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile outside [0, 1]");
  const auto n = static_cast<std::size_t>(img.size());
  const auto rank = static_cast<std::size_t>(std::floor(q * static_cast<double>(n - 1)));
  const auto bins = histogram(img);
  std::size_t seen = 0;
  for (std::size_t v = 0; v < bins.size(); ++v) {
    seen += bins[v];
    if (seen > rank) return static_cast<std::uint8_t>(v);
  }
  return 255;
}

}  // namespace ocrpipe
