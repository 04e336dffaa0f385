#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "ocrpipe/lineimg.hpp"
#include "ocrpipe/rng.hpp"

namespace ocrpipe {

/// Elastic distortion from a smoothed high-resolution noise field.
struct HiResDistortParams {
  double sigma = 30.0;    // stddev of the Gaussian applied to the noise field, pixels
  double maxdelta = 12.0; // largest displacement, pixels
  friend bool operator==(const HiResDistortParams&, const HiResDistortParams&) = default;
};

/// Piecewise-bilinear warp driven by a coarse control grid.
struct LoResDistortParams {
  int num_steps = 8;          // grid divisions per axis
  double distort_limit = 0.5; // max per-vertex displacement, fraction of one cell
  friend bool operator==(const LoResDistortParams&, const LoResDistortParams&) = default;
};

struct NoiseParams {
  double mu = 15.0;
  double var_min = 10.0;
  double var_max = 50.0;
  friend bool operator==(const NoiseParams&, const NoiseParams&) = default;
};

struct BrightnessContrastParams {
  double brightness_limit = 0.2;
  double contrast_limit = 0.9;
  friend bool operator==(const BrightnessContrastParams&, const BrightnessContrastParams&) = default;
};

/// Blotches: seeds with per-pixel probability `amount` grow to disks of
/// diameter `scale`. Foreground blobs take the fg_quantile brightness,
/// background blobs the bg_quantile brightness of the source image.
struct BlotchParams {
  double amount = 0.0009;
  double scale = 9.0;
  double fg_quantile = 0.75;
  double bg_quantile = 0.05;
  friend bool operator==(const BlotchParams&, const BlotchParams&) = default;
};

using AugmentOp = std::variant<HiResDistortParams, LoResDistortParams, NoiseParams,
                               BrightnessContrastParams, BlotchParams>;

/// Name used in plan files: distort_highres, distort_lowres, gaussian_noise,
/// brightness_contrast, blotches.
std::string_view op_name(const AugmentOp& op);

/// Throws std::invalid_argument if the operator parameters are out of range.
void validate(const AugmentOp& op);

struct AugmentationPlan {
  std::vector<AugmentOp> ops;  // applied in this order
  double ratio = 0.0;          // percent of extra lines; 200 means +200 %
  std::uint64_t seed = 0;      // default seed when the plan is run from a file

  friend bool operator==(const AugmentationPlan&, const AugmentationPlan&) = default;
};

void validate(const AugmentationPlan& plan);

/// {"ratio", "seed", "ops": [{"op": name, ...parameters}]}; missing
/// parameters take their defaults.
nlohmann::json plan_to_json(const AugmentationPlan& plan);
AugmentationPlan plan_from_json(const nlohmann::json& j);
nlohmann::json op_to_json(const AugmentOp& op);
AugmentOp op_from_json(const nlohmann::json& j);

// --- operators -------------------------------------------------------------

struct DisplacementField {
  RasterD dy;
  RasterD dx;
};

/// Gaussian-smoothed white noise, each channel normalized to max |v| = 1 and
/// scaled by maxdelta. Draws dy noise first, then dx.
DisplacementField highres_displacement(Eigen::Index height, Eigen::Index width,
                                       const HiResDistortParams& p, Rng& rng);

LineImage distort_highres(const LineImage& img, const HiResDistortParams& p, Rng& rng);

/// (num_steps + 1)^2 distorted vertex positions in pixel coordinates.
struct ControlGrid {
  RasterD x;
  RasterD y;
};

/// Undisplaced control grid spanning the pixel centres [0, w-1] x [0, h-1].
ControlGrid regular_grid(Eigen::Index height, Eigen::Index width, int num_steps);

/// Jittered control grid. Border vertices only slide along their edge and
/// corners are pinned; displacements are then scaled per axis so that every
/// row stays strictly increasing in x and every column in y.
ControlGrid lowres_grid(Eigen::Index height, Eigen::Index width, const LoResDistortParams& p,
                        Rng& rng);

LineImage distort_lowres(const LineImage& img, const LoResDistortParams& p, Rng& rng);

LineImage add_gaussian_noise(const LineImage& img, const NoiseParams& p, Rng& rng);

LineImage random_brightness_contrast(const LineImage& img, const BrightnessContrastParams& p,
                                     Rng& rng);

/// Binary blob mask: Bernoulli(amount) seeds, smoothed with stddev scale / 4
/// and cut where a lone seed's response reaches radius scale / 2.
Raster<bool> blob_mask(Eigen::Index height, Eigen::Index width, double amount, double scale,
                       Rng& rng);

struct BlotchMasks {
  Raster<bool> foreground;
  Raster<bool> background;
};

/// The two masks add_blotches paints, drawn in the order it draws them.
BlotchMasks blotch_masks(Eigen::Index height, Eigen::Index width, const BlotchParams& p, Rng& rng);

/// Foreground blobs are painted first; background blobs overwrite them.
LineImage add_blotches(const LineImage& img, const BlotchParams& p, Rng& rng);

LineImage apply_op(const LineImage& img, const AugmentOp& op, Rng& rng);

// --- dataset level ---------------------------------------------------------

/// ceil(ratio / 100 * n)
std::size_t augmented_count(std::size_t n, double ratio);

struct AugmentedDataset {
  std::vector<LineImage> lines;     // originals followed by generated lines
  std::vector<std::size_t> source;  // index of the original each line came from
};

/// Generates augmented_count(n, plan.ratio) new lines. Line k samples its
/// source uniformly and runs all ops from Rng::substream(seed, k), so the
/// result is independent of `workers`.
AugmentedDataset apply_plan(const std::vector<LineImage>& lines, const AugmentationPlan& plan,
                            std::uint64_t seed, unsigned workers = 1);

}  // namespace ocrpipe
