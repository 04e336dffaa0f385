#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "ocrpipe/raster.hpp"

namespace ocrpipe {

enum class Depth { grayscale, binary };

/// Single-channel text line raster. Always at least 1x1; a binary image
/// holds only the values 0 and 255.
class LineImage {
 public:
  explicit LineImage(Raster8 pixels, Depth depth = Depth::grayscale);

  static LineImage filled(Eigen::Index height, Eigen::Index width, std::uint8_t value,
                          Depth depth = Depth::grayscale);

  Eigen::Index height() const { return pixels_.rows(); }
  Eigen::Index width() const { return pixels_.cols(); }
  Depth depth() const { return depth_; }
  const Raster8& pixels() const { return pixels_; }
  std::uint8_t operator()(Eigen::Index y, Eigen::Index x) const { return pixels_(y, x); }

  friend bool operator==(const LineImage& a, const LineImage& b) {
    return a.depth_ == b.depth_ && a.pixels_.rows() == b.pixels_.rows() &&
           a.pixels_.cols() == b.pixels_.cols() && (a.pixels_ == b.pixels_).all();
  }

 private:
  Raster8 pixels_;
  Depth depth_;
};

enum class InputName { gray48, bin48, gray64, bin64 };

/// One of the four line-image input configurations (height x binarization).
struct InputConfig {
  InputName name;
  int target_height;
  bool binarize;

  static InputConfig from_name(InputName name);
  static InputConfig parse(std::string_view name);
  friend bool operator==(const InputConfig&, const InputConfig&) = default;
};

std::string_view to_string(InputName name);

struct Baseline {
  double slope = 0.0;      // dy/dx, image y grows downwards
  double intercept = 0.0;  // y at x = 0
};

/// Vertical-only resampling to `target_height` rows: area averaging when
/// shrinking, bilinear when growing. Width is never touched.
LineImage rescale_height(const LineImage& img, int target_height);

/// Row-resampling weights used by rescale_height; row y of the result holds the
/// contribution of every source row to output row y.
Eigen::MatrixXd height_resampling_matrix(Eigen::Index source_height, Eigen::Index target_height);

/// Default Sauvola window for a line of the given height: h/2 - 1, bumped to
/// the next odd value and to at least 3.
int default_sauvola_window(Eigen::Index height);

/// Window actually used on an image: clamped to the smaller image dimension
/// (and kept odd).
int effective_sauvola_window(int window, Eigen::Index height, Eigen::Index width);

struct SauvolaParams {
  std::optional<int> window;  // default_sauvola_window(height) when unset
  double k = 0.2;
  double dynamic_range = 128.0;
};

/// Local threshold T = m * (1 + k * (s / R - 1)) over a mirrored window;
/// pixels strictly below T become 0, all others 255.
LineImage binarize_sauvola(const LineImage& img, const SauvolaParams& params = {});

struct OtsuResult {
  LineImage image;
  int threshold;    // pixels < threshold map to 0
  bool degenerate;  // single-valued histogram, output is all 255
};

OtsuResult binarize_otsu(const LineImage& img);

/// Vertical shear that makes `baseline` horizontal. The canvas grows to hold
/// every sheared pixel; uncovered area takes the 0.95 brightness quantile.
LineImage deskew(const LineImage& img, const Baseline& baseline);

/// Least-squares line through the intensity-weighted ink centroids of each
/// column. Throws std::runtime_error("blank line") when there is no ink.
Baseline estimate_baseline(const LineImage& img);

/// deskew (when a baseline is given) -> rescale_height -> Sauvola (if the
/// configuration binarizes, using the default window of the target height).
LineImage prepare(const LineImage& img, const InputConfig& cfg,
                  const std::optional<Baseline>& baseline = std::nullopt);

}  // namespace ocrpipe
