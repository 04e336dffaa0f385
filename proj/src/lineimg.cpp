#include "ocrpipe/lineimg.hpp"

#include <algorithm>
#include <cmath>

namespace ocrpipe {

namespace {

void require_grayscale(const LineImage& img, const char* op) {
  if (img.depth() != Depth::grayscale) {
    throw std::invalid_argument(std::string(op) + ": expects a grayscale image");
  }
}

}  // namespace

LineImage::LineImage(Raster8 pixels, Depth depth) : pixels_(std::move(pixels)), depth_(depth) {
  if (pixels_.rows() < 1 || pixels_.cols() < 1) {
    throw std::invalid_argument("LineImage: width and height must be >= 1");
  }
  if (depth_ == Depth::binary && !((pixels_ == 0) || (pixels_ == 255)).all()) {
    throw std::invalid_argument("LineImage: binary image with values other than 0/255");
  }
}

LineImage LineImage::filled(Eigen::Index height, Eigen::Index width, std::uint8_t value,
                            Depth depth) {
  return LineImage(Raster8::Constant(height, width, value), depth);
}

InputConfig InputConfig::from_name(InputName name) {
  switch (name) {
    case InputName::gray48: return {name, 48, false};
    case InputName::bin48: return {name, 48, true};
    case InputName::gray64: return {name, 64, false};
    case InputName::bin64: return {name, 64, true};
  }
  throw std::invalid_argument("unknown input configuration");
}

InputConfig InputConfig::parse(std::string_view name) {
  for (auto n : {InputName::gray48, InputName::bin48, InputName::gray64, InputName::bin64}) {
    if (to_string(n) == name) return from_name(n);
  }
  throw std::invalid_argument("unknown input configuration '" + std::string(name) + "'");
}

std::string_view to_string(InputName name) {
  switch (name) {
    case InputName::gray48: return "gray48";
    case InputName::bin48: return "bin48";
    case InputName::gray64: return "gray64";
    case InputName::bin64: return "bin64";
  }
  return "?";
}

Eigen::MatrixXd height_resampling_matrix(Eigen::Index source_height, Eigen::Index target_height) {
  Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(target_height, source_height);
  const double scale = double(source_height) / double(target_height);
  if (target_height < source_height) {
    // Area averaging: output row y covers source span [y*scale, (y+1)*scale).
    for (Eigen::Index y = 0; y < target_height; ++y) {
      const double lo = double(y) * scale, hi = double(y + 1) * scale;
      const auto first = static_cast<Eigen::Index>(std::floor(lo));
      const auto last = std::min<Eigen::Index>(static_cast<Eigen::Index>(std::ceil(hi)),
                                               source_height);
      for (Eigen::Index r = first; r < last; ++r) {
        const double overlap = std::min(hi, double(r + 1)) - std::max(lo, double(r));
        if (overlap > 0) weights(y, r) = overlap / scale;
      }
    }
  } else {
    // Bilinear with pixel-center alignment.
    for (Eigen::Index y = 0; y < target_height; ++y) {
      const double src = std::clamp((double(y) + 0.5) * scale - 0.5, 0.0,
                                    double(source_height - 1));
      const auto r0 = static_cast<Eigen::Index>(std::floor(src));
      const Eigen::Index r1 = std::min<Eigen::Index>(r0 + 1, source_height - 1);
      const double f = src - double(r0);
      weights(y, r0) += 1.0 - f;
      weights(y, r1) += f;
    }
  }
  return weights;
}

LineImage rescale_height(const LineImage& img, int target_height) {
  if (target_height < 1) throw std::invalid_argument("rescale_height: target_height must be >= 1");
  if (target_height == img.height()) return LineImage(img.pixels(), Depth::grayscale);
  const Eigen::MatrixXd weights = height_resampling_matrix(img.height(), target_height);
  const Eigen::MatrixXd source = img.pixels().cast<double>().matrix();
  const Eigen::MatrixXd resampled = weights * source;
  return LineImage(to_u8(resampled.array()), Depth::grayscale);
}

int default_sauvola_window(Eigen::Index height) {
  int window = static_cast<int>(height / 2) - 1;
  if (window % 2 == 0) ++window;
  return std::max(window, 3);
}

int effective_sauvola_window(int window, Eigen::Index height, Eigen::Index width) {
  const auto limit = static_cast<int>(std::min(height, width));
  if (window <= limit) return window;
  return limit % 2 == 1 ? limit : limit - 1;
}

LineImage binarize_sauvola(const LineImage& img, const SauvolaParams& params) {
  require_grayscale(img, "binarize_sauvola");
  const int requested = params.window.value_or(default_sauvola_window(img.height()));
  if (requested < 3 || requested % 2 == 0) {
    throw std::invalid_argument("binarize_sauvola: window must be odd and >= 3");
  }
  const Eigen::Index h = img.height(), w = img.width();
  const int window = effective_sauvola_window(requested, h, w);
  const Eigen::Index r = window / 2;

  // Summed-area tables over the mirror-padded image, one extra leading row/column of zeros.
  const Eigen::Index ph = h + 2 * r, pw = w + 2 * r;
  Raster<std::int64_t> sum = Raster<std::int64_t>::Zero(ph + 1, pw + 1);
  Raster<std::int64_t> sq = Raster<std::int64_t>::Zero(ph + 1, pw + 1);
  for (Eigen::Index y = 0; y < ph; ++y) {
    const Eigen::Index sy = reflect_index(y - r, h);
    for (Eigen::Index x = 0; x < pw; ++x) {
      const std::int64_t v = img(sy, reflect_index(x - r, w));
      sum(y + 1, x + 1) = v + sum(y, x + 1) + sum(y + 1, x) - sum(y, x);
      sq(y + 1, x + 1) = v * v + sq(y, x + 1) + sq(y + 1, x) - sq(y, x);
    }
  }

  const double n = double(window) * double(window);
  Raster8 out(h, w);
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      // Window centred on (y, x) spans padded rows [y, y + window).
      const Eigen::Index y1 = y + window, x1 = x + window;
      const std::int64_t s1 = sum(y1, x1) - sum(y, x1) - sum(y1, x) + sum(y, x);
      const std::int64_t s2 = sq(y1, x1) - sq(y, x1) - sq(y1, x) + sq(y, x);
      const double mean = double(s1) / n;
      const double var = std::max(0.0, double(s2) / n - mean * mean);
      const double threshold =
          mean * (1.0 + params.k * (std::sqrt(var) / params.dynamic_range - 1.0));
      out(y, x) = double(img(y, x)) < threshold ? 0 : 255;
    }
  }
  return LineImage(std::move(out), Depth::binary);
}

OtsuResult binarize_otsu(const LineImage& img) {
  require_grayscale(img, "binarize_otsu");
  const auto bins = histogram(img.pixels());
  const double total = double(img.pixels().size());
  double total_sum = 0;
  for (int v = 0; v < 256; ++v) total_sum += double(v) * double(bins[v]);

  int best_threshold = -1;
  double best = -1.0;
  double n0 = 0, s0 = 0;
  for (int t = 1; t < 256; ++t) {
    n0 += double(bins[t - 1]);
    s0 += double(t - 1) * double(bins[t - 1]);
    const double n1 = total - n0;
    if (n0 == 0 || n1 == 0) continue;
    const double m0 = s0 / n0, m1 = (total_sum - s0) / n1;
    const double between = (n0 / total) * (n1 / total) * (m0 - m1) * (m0 - m1);
    if (between > best) {
      best = between;
      best_threshold = t;
    }
  }
  if (best_threshold < 0) {
    return {LineImage::filled(img.height(), img.width(), 255, Depth::binary), 0, true};
  }
  Raster8 out = (img.pixels() < best_threshold).select(Raster8::Zero(img.height(), img.width()),
                                                       Raster8::Constant(img.height(), img.width(), 255));
  return {LineImage(std::move(out), Depth::binary), best_threshold, false};
}

LineImage deskew(const LineImage& img, const Baseline& baseline) {
  if (!(std::abs(baseline.slope) < 1.0)) {
    throw std::invalid_argument("deskew: |slope| must be < 1");
  }
  const Eigen::Index h = img.height(), w = img.width();
  // Column shifts in 1/256 pixel units. llround is odd-symmetric, so +s and -s
  // produce exactly mirrored shears.
  std::vector<std::int64_t> shift(static_cast<std::size_t>(w));
  std::int64_t max_shift = 0;
  for (Eigen::Index x = 0; x < w; ++x) {
    shift[x] = std::llround(baseline.slope * double(x) * 256.0);
    max_shift = std::max(max_shift, std::abs(shift[x]));
  }
  const std::int64_t extra = (max_shift + 255) / 256;
  const std::int64_t offset = baseline.slope > 0 ? extra * 256 : 0;
  const Eigen::Index out_h = h + extra;
  const std::int64_t fill = quantile(img.pixels(), 0.95);

  auto at = [&](std::int64_t y, Eigen::Index x) -> std::int64_t {
    return (y >= 0 && y < h) ? std::int64_t(img(y, x)) : fill;
  };

  Raster8 out(out_h, w);
  for (Eigen::Index x = 0; x < w; ++x) {
    for (Eigen::Index y = 0; y < out_h; ++y) {
      const std::int64_t src = std::int64_t(y) * 256 + shift[x] - offset;
      const std::int64_t row = src >= 0 ? src / 256 : -((-src + 255) / 256);
      const std::int64_t frac = src - row * 256;
      const std::int64_t v = (at(row, x) * (256 - frac) + at(row + 1, x) * frac + 128) >> 8;
      out(y, x) = static_cast<std::uint8_t>(v);
    }
  }
  return LineImage(std::move(out), baseline.slope == 0.0 ? img.depth() : Depth::grayscale);
}

Baseline estimate_baseline(const LineImage& img) {
  const std::uint8_t ink_below = quantile(img.pixels(), 0.5);
  std::vector<double> xs, ys;
  for (Eigen::Index x = 0; x < img.width(); ++x) {
    double weight = 0, moment = 0;
    for (Eigen::Index y = 0; y < img.height(); ++y) {
      if (img(y, x) < ink_below) {
        const double wgt = 255.0 - double(img(y, x));
        weight += wgt;
        moment += wgt * double(y);
      }
    }
    if (weight > 0) {
      xs.push_back(double(x));
      ys.push_back(moment / weight);
    }
  }
  if (xs.empty()) throw std::runtime_error("blank line");
  if (xs.size() == 1) return {0.0, ys.front()};

  const Eigen::Map<const Eigen::VectorXd> X(xs.data(), Eigen::Index(xs.size()));
  const Eigen::Map<const Eigen::VectorXd> Y(ys.data(), Eigen::Index(ys.size()));
  const double mx = X.mean(), my = Y.mean();
  const Eigen::VectorXd dx = X.array() - mx;
  const double slope = dx.dot(Y.array().matrix() - Eigen::VectorXd::Constant(Y.size(), my)) /
                       dx.squaredNorm();
  return {slope, my - slope * mx};
}

LineImage prepare(const LineImage& img, const InputConfig& cfg,
                  const std::optional<Baseline>& baseline) {
  LineImage current = baseline ? deskew(img, *baseline) : img;
  current = rescale_height(current, cfg.target_height);
  if (cfg.binarize) current = binarize_sauvola(current);
  return current;
}

}  // namespace ocrpipe
