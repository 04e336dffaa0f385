#include "ocrpipe/augment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <optional>
#include <thread>

namespace ocrpipe {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

void require_grayscale(const LineImage& img, const char* op) {
  if (img.depth() != Depth::grayscale) {
    throw std::invalid_argument(std::string(op) + ": expects a grayscale image");
  }
}

void require(bool condition, const char* message) {
  if (!condition) throw std::invalid_argument(message);
}

// Smallest cell span a grid row/column may shrink to, relative to its rest length.
constexpr double kMinCellFraction = 0.05;

}  // namespace

std::string_view op_name(const AugmentOp& op) {
  return std::visit(overloaded{
                        [](const HiResDistortParams&) { return std::string_view("distort_highres"); },
                        [](const LoResDistortParams&) { return std::string_view("distort_lowres"); },
                        [](const NoiseParams&) { return std::string_view("gaussian_noise"); },
                        [](const BrightnessContrastParams&) {
                          return std::string_view("brightness_contrast");
                        },
                        [](const BlotchParams&) { return std::string_view("blotches"); },
                    },
                    op);
}

void validate(const AugmentOp& op) {
  std::visit(overloaded{
                 [](const HiResDistortParams& p) {
                   require(p.sigma > 0, "distort_highres: sigma must be > 0");
                   require(p.maxdelta >= 0, "distort_highres: maxdelta must be >= 0");
                 },
                 [](const LoResDistortParams& p) {
                   require(p.num_steps >= 1, "distort_lowres: num_steps must be >= 1");
                   require(p.distort_limit >= 0 && p.distort_limit < 1,
                           "distort_lowres: distort_limit must be in [0, 1)");
                 },
                 [](const NoiseParams& p) {
                   require(p.var_min >= 0 && p.var_min <= p.var_max,
                           "gaussian_noise: need 0 <= var_min <= var_max");
                 },
                 [](const BrightnessContrastParams& p) {
                   require(p.brightness_limit >= 0 && p.brightness_limit <= 1,
                           "brightness_contrast: brightness_limit must be in [0, 1]");
                   require(p.contrast_limit >= 0 && p.contrast_limit <= 1,
                           "brightness_contrast: contrast_limit must be in [0, 1]");
                 },
                 [](const BlotchParams& p) {
                   require(p.amount >= 0 && p.amount <= 0.01, "blotches: amount must be in [0, 0.01]");
                   require(p.scale >= 1, "blotches: scale must be >= 1");
                   require(p.fg_quantile >= 0 && p.fg_quantile <= 1 && p.bg_quantile >= 0 &&
                               p.bg_quantile <= 1,
                           "blotches: quantiles must be in [0, 1]");
                 },
             },
             op);
}

void validate(const AugmentationPlan& plan) {
  require(plan.ratio >= 0, "augmentation plan: ratio must be >= 0");
  for (const auto& op : plan.ops) validate(op);
}

nlohmann::json op_to_json(const AugmentOp& op) {
  nlohmann::json j = std::visit(
      overloaded{
          [](const HiResDistortParams& p) {
            return nlohmann::json{{"sigma", p.sigma}, {"maxdelta", p.maxdelta}};
          },
          [](const LoResDistortParams& p) {
            return nlohmann::json{{"num_steps", p.num_steps}, {"distort_limit", p.distort_limit}};
          },
          [](const NoiseParams& p) {
            return nlohmann::json{{"mu", p.mu}, {"var_min", p.var_min}, {"var_max", p.var_max}};
          },
          [](const BrightnessContrastParams& p) {
            return nlohmann::json{{"brightness_limit", p.brightness_limit},
                                  {"contrast_limit", p.contrast_limit}};
          },
          [](const BlotchParams& p) {
            return nlohmann::json{{"amount", p.amount},
                                  {"scale", p.scale},
                                  {"fg_quantile", p.fg_quantile},
                                  {"bg_quantile", p.bg_quantile}};
          },
      },
      op);
  j["op"] = std::string(op_name(op));
  return j;
}

AugmentOp op_from_json(const nlohmann::json& j) {
  const auto name = j.at("op").get<std::string>();
  AugmentOp op;
  if (name == "distort_highres") {
    HiResDistortParams p;
    p.sigma = j.value("sigma", p.sigma);
    p.maxdelta = j.value("maxdelta", p.maxdelta);
    op = p;
  } else if (name == "distort_lowres") {
    LoResDistortParams p;
    p.num_steps = j.value("num_steps", p.num_steps);
    p.distort_limit = j.value("distort_limit", p.distort_limit);
    op = p;
  } else if (name == "gaussian_noise") {
    NoiseParams p;
    p.mu = j.value("mu", p.mu);
    p.var_min = j.value("var_min", p.var_min);
    p.var_max = j.value("var_max", p.var_max);
    op = p;
  } else if (name == "brightness_contrast") {
    BrightnessContrastParams p;
    p.brightness_limit = j.value("brightness_limit", p.brightness_limit);
    p.contrast_limit = j.value("contrast_limit", p.contrast_limit);
    op = p;
  } else if (name == "blotches") {
    BlotchParams p;
    p.amount = j.value("amount", p.amount);
    p.scale = j.value("scale", p.scale);
    p.fg_quantile = j.value("fg_quantile", p.fg_quantile);
    p.bg_quantile = j.value("bg_quantile", p.bg_quantile);
    op = p;
  } else {
    throw std::invalid_argument("unknown augmentation op '" + name + "'");
  }
  validate(op);
  return op;
}

nlohmann::json plan_to_json(const AugmentationPlan& plan) {
  nlohmann::json ops = nlohmann::json::array();
  for (const auto& op : plan.ops) ops.push_back(op_to_json(op));
  return nlohmann::json{{"ratio", plan.ratio}, {"seed", plan.seed}, {"ops", std::move(ops)}};
}

AugmentationPlan plan_from_json(const nlohmann::json& j) {
  AugmentationPlan plan;
  plan.ratio = j.value("ratio", 0.0);
  plan.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("ops")) {
    for (const auto& item : j.at("ops")) plan.ops.push_back(op_from_json(item));
  }
  validate(plan);
  return plan;
}

// --- high-resolution distortion ----------------------------------------------

DisplacementField highres_displacement(Eigen::Index height, Eigen::Index width,
                                       const HiResDistortParams& p, Rng& rng) {
  auto channel = [&] {
    RasterD noise(height, width);
    for (Eigen::Index i = 0; i < noise.size(); ++i) noise.data()[i] = rng.normal();
    RasterD smooth = gaussian_blur(noise, p.sigma);
    const double peak = smooth.abs().maxCoeff();
    if (peak > 0) smooth /= peak;
    return RasterD(smooth * p.maxdelta);
  };
  RasterD dy = channel();
  RasterD dx = channel();
  return {std::move(dy), std::move(dx)};
}

LineImage distort_highres(const LineImage& img, const HiResDistortParams& p, Rng& rng) {
  require_grayscale(img, "distort_highres");
  validate(AugmentOp{p});
  const auto field = highres_displacement(img.height(), img.width(), p, rng);
  RasterD out(img.height(), img.width());
  for (Eigen::Index y = 0; y < img.height(); ++y) {
    for (Eigen::Index x = 0; x < img.width(); ++x) {
      out(y, x) = sample_bilinear(img.pixels(), double(y) + field.dy(y, x),
                                  double(x) + field.dx(y, x));
    }
  }
  return LineImage(to_u8(out));
}

// --- low-resolution grid distortion --------------------------------------------

ControlGrid regular_grid(Eigen::Index height, Eigen::Index width, int num_steps) {
  const Eigen::Index n = num_steps + 1;
  const double cw = double(width - 1) / num_steps, ch = double(height - 1) / num_steps;
  ControlGrid grid{RasterD(n, n), RasterD(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      grid.x(i, j) = double(j) * cw;
      grid.y(i, j) = double(i) * ch;
    }
  }
  return grid;
}

ControlGrid lowres_grid(Eigen::Index height, Eigen::Index width, const LoResDistortParams& p,
                        Rng& rng) {
  validate(AugmentOp{p});
  const int steps = p.num_steps;
  const Eigen::Index n = steps + 1;
  const double cw = double(width - 1) / steps, ch = double(height - 1) / steps;

  RasterD dx(n, n), dy(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      dx(i, j) = rng.uniform(-p.distort_limit, p.distort_limit) * cw;
      dy(i, j) = rng.uniform(-p.distort_limit, p.distort_limit) * ch;
    }
  }
  // Border vertices may only slide along their edge.
  dx.col(0).setZero();
  dx.col(steps).setZero();
  dy.row(0).setZero();
  dy.row(steps).setZero();

  ControlGrid grid = regular_grid(height, width, steps);

  // Largest per-axis factor keeping vertices inside the image and every cell
  // at least kMinCellFraction of its rest span.
  auto axis_factor = [&](const RasterD& d, const RasterD& base, double span, double extent,
                         bool along_rows) {
    double factor = 1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        const double v = d(i, j), b = base(i, j);
        if (v > 0) factor = std::min(factor, (extent - b) / v);
        if (v < 0) factor = std::min(factor, -b / v);
        if (along_rows ? j + 1 < n : i + 1 < n) {
          const double next = along_rows ? d(i, j + 1) : d(i + 1, j);
          const double shrink = v - next;
          if (shrink > 0) factor = std::min(factor, (1.0 - kMinCellFraction) * span / shrink);
        }
      }
    }
    return std::max(0.0, factor);
  };
  const double fx = axis_factor(dx, grid.x, cw, double(width - 1), true);
  const double fy = axis_factor(dy, grid.y, ch, double(height - 1), false);
  grid.x += fx * dx;
  grid.y += fy * dy;
  return grid;
}

LineImage distort_lowres(const LineImage& img, const LoResDistortParams& p, Rng& rng) {
  require_grayscale(img, "distort_lowres");
  const int steps = p.num_steps;
  const ControlGrid grid = lowres_grid(img.height(), img.width(), p, rng);
  const double cw = double(img.width() - 1) / steps, ch = double(img.height() - 1) / steps;

  auto locate = [steps](double pos, double span, Eigen::Index& cell, double& frac) {
    if (span <= 0) {
      cell = 0;
      frac = 0;
      return;
    }
    const double g = pos / span;
    cell = std::min<Eigen::Index>(static_cast<Eigen::Index>(std::floor(g)), steps - 1);
    frac = g - double(cell);
  };

  RasterD out(img.height(), img.width());
  for (Eigen::Index y = 0; y < img.height(); ++y) {
    Eigen::Index i;
    double v;
    locate(double(y), ch, i, v);
    for (Eigen::Index x = 0; x < img.width(); ++x) {
      Eigen::Index j;
      double u;
      locate(double(x), cw, j, u);
      auto blend = [&](const RasterD& g) {
        return (1 - u) * (1 - v) * g(i, j) + u * (1 - v) * g(i, j + 1) +
               (1 - u) * v * g(i + 1, j) + u * v * g(i + 1, j + 1);
      };
      out(y, x) = sample_bilinear(img.pixels(), blend(grid.y), blend(grid.x));
    }
  }
  return LineImage(to_u8(out));
}

// --- photometric operators -----------------------------------------------------

LineImage add_gaussian_noise(const LineImage& img, const NoiseParams& p, Rng& rng) {
  require_grayscale(img, "add_gaussian_noise");
  validate(AugmentOp{p});
  const double sigma = std::sqrt(rng.uniform(p.var_min, p.var_max));
  RasterD out = img.pixels().cast<double>();
  for (Eigen::Index i = 0; i < out.size(); ++i) out.data()[i] += p.mu + sigma * rng.normal();
  return LineImage(to_u8(out));
}

LineImage random_brightness_contrast(const LineImage& img, const BrightnessContrastParams& p,
                                     Rng& rng) {
  require_grayscale(img, "random_brightness_contrast");
  validate(AugmentOp{p});
  const double alpha = rng.uniform(1.0 - p.contrast_limit, 1.0 + p.contrast_limit);
  const double beta = rng.uniform(-p.brightness_limit, p.brightness_limit);
  const RasterD values = img.pixels().cast<double>();
  const double mean = values.mean();
  return LineImage(to_u8(values * alpha + beta * mean));
}

// --- blotches --------------------------------------------------------------------

Raster<bool> blob_mask(Eigen::Index height, Eigen::Index width, double amount, double scale,
                       Rng& rng) {
  RasterD seeds = RasterD::Zero(height, width);
  bool any = false;
  for (Eigen::Index i = 0; i < seeds.size(); ++i) {
    if (rng.uniform01() < amount) {
      seeds.data()[i] = 1.0;
      any = true;
    }
  }
  if (!any) return Raster<bool>::Constant(height, width, false);

  // A lone seed at the origin responds k(dy) * k(dx) with k the normalized
  // 1-D kernel, so thresholding at k(r) * k(0) keeps exactly dy^2 + dx^2 <= r^2.
  const double sigma = scale / 4.0;
  const int radius = gaussian_radius(sigma);
  double z = 0;
  for (int i = -radius; i <= radius; ++i) z += std::exp(-double(i * i) / (2 * sigma * sigma));
  const double r = scale / 2.0;
  const double threshold = std::exp(-r * r / (2 * sigma * sigma)) / (z * z);

  const RasterD smooth = gaussian_blur(seeds, sigma);
  return smooth >= threshold * (1.0 - 1e-9);
}

BlotchMasks blotch_masks(Eigen::Index height, Eigen::Index width, const BlotchParams& p, Rng& rng) {
  Raster<bool> fg = blob_mask(height, width, p.amount, p.scale, rng);
  Raster<bool> bg = blob_mask(height, width, p.amount, p.scale, rng);
  return {std::move(fg), std::move(bg)};
}

LineImage add_blotches(const LineImage& img, const BlotchParams& p, Rng& rng) {
  require_grayscale(img, "add_blotches");
  validate(AugmentOp{p});
  const std::uint8_t fg_value = quantile(img.pixels(), p.fg_quantile);
  const std::uint8_t bg_value = quantile(img.pixels(), p.bg_quantile);
  const auto masks = blotch_masks(img.height(), img.width(), p, rng);
  Raster8 out = masks.foreground.select(Raster8::Constant(img.height(), img.width(), fg_value),
                                        img.pixels());
  out = masks.background.select(Raster8::Constant(img.height(), img.width(), bg_value), out);
  return LineImage(std::move(out));
}

LineImage apply_op(const LineImage& img, const AugmentOp& op, Rng& rng) {
  return std::visit(
      overloaded{
          [&](const HiResDistortParams& p) { return distort_highres(img, p, rng); },
          [&](const LoResDistortParams& p) { return distort_lowres(img, p, rng); },
          [&](const NoiseParams& p) { return add_gaussian_noise(img, p, rng); },
          [&](const BrightnessContrastParams& p) { return random_brightness_contrast(img, p, rng); },
          [&](const BlotchParams& p) { return add_blotches(img, p, rng); },
      },
      op);
}

// --- dataset level -------------------------------------------------------------------

std::size_t augmented_count(std::size_t n, double ratio) {
  if (ratio < 0) throw std::invalid_argument("augmentation ratio must be >= 0");
  const long double exact = static_cast<long double>(ratio) * static_cast<long double>(n) / 100.0L;
  // Guard against representation error pushing an exact integer just above itself.
  return static_cast<std::size_t>(std::ceil(exact - 1e-9L));
}

AugmentedDataset apply_plan(const std::vector<LineImage>& lines, const AugmentationPlan& plan,
                            std::uint64_t seed, unsigned workers) {
  if (lines.empty()) throw std::invalid_argument("apply_plan: empty dataset");
  validate(plan);
  const std::size_t n = lines.size();
  const std::size_t extra = augmented_count(n, plan.ratio);

  std::vector<std::optional<LineImage>> generated(extra);
  std::vector<std::size_t> origin(extra);
  auto produce = [&](std::size_t k) {
    Rng rng = Rng::substream(seed, k);
    const std::size_t src = rng.index(n);
    LineImage current = lines[src];
    for (const auto& op : plan.ops) current = apply_op(current, op, rng);
    origin[k] = src;
    generated[k].emplace(std::move(current));
  };

  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(extra, 1))));
  if (workers == 1) {
    for (std::size_t k = 0; k < extra; ++k) produce(k);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < workers; ++t) {
      pool.emplace_back([&] {
        for (std::size_t k = next++; k < extra && !failed; k = next++) {
          try {
            produce(k);
          } catch (...) {
            if (!failed.exchange(true)) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }

  AugmentedDataset out;
  out.lines.reserve(n + extra);
  out.source.reserve(n + extra);
  for (std::size_t i = 0; i < n; ++i) {
    out.lines.push_back(lines[i]);
    out.source.push_back(i);
  }
  for (std::size_t k = 0; k < extra; ++k) {
    out.lines.push_back(std::move(*generated[k]));
    out.source.push_back(origin[k]);
  }
  return out;
}

}  // namespace ocrpipe
