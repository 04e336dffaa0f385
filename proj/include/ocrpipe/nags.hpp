#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "ocrpipe/lineimg.hpp"

namespace ocrpipe {

/// One CRNN candidate: K 3x3 convolutions whose widths decay by R from N at
/// the last layer, P 2x2 poolings kept at the end of the CNN, then one LSTM
/// per entry of M.
struct ArchitectureSpec {
  InputConfig input = InputConfig::from_name(InputName::gray48);
  int N = 128;
  double R = 2.0;
  int K = 2;
  int P = 2;
  std::vector<int> M{200};
  double dropout = 0.5;

  friend bool operator==(const ArchitectureSpec&, const ArchitectureSpec&) = default;
};

/// (N=128, R=2, K=2, P=2, M={200}) on gray48.
ArchitectureSpec calamari_default_spec();
/// (gray48, N=124, R=1.5, K=6, P=1, M={650}, dropout 0.5).
ArchitectureSpec psi_spec();

class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(std::vector<std::string> breaches);
  const std::vector<std::string>& breaches() const { return breaches_; }

 private:
  std::vector<std::string> breaches_;
};

/// Filter count per convolution: f_K = N, f_i = max(floor(f_{i+1} / R), 8).
std::vector<int> filter_counts(int N, double R, int K);

/// Every violated invariant, empty when the spec is valid.
std::vector<std::string> validate(const ArchitectureSpec& spec);

/// Non-fatal remarks, e.g. stacked LSTMs.
std::vector<std::string> warnings(const ArchitectureSpec& spec);

enum class LayerKind { conv, pool, lstm };

struct Layer {
  LayerKind kind;
  int kernel = 0;  // square kernel edge; 0 for lstm
  int stride = 0;
  int size = 0;    // filters (conv) or units (lstm); 0 for pool
  friend bool operator==(const Layer&, const Layer&) = default;
};

struct LayerLayout {
  std::vector<Layer> layers;
  double dropout = 0.0;  // applied after the LSTM block
  friend bool operator==(const LayerLayout&, const LayerLayout&) = default;
};

/// conv_1..conv_{K-1}, [pool if P=2], conv_K, [pool if P>=1], lstm per M.
/// Throws ValidationError listing every breach.
LayerLayout layout(const ArchitectureSpec& spec);

/// Weights and biases of the convolutions, LSTMs and the final dense layer.
/// The LSTM input width is f_K * height / 2^P. A codec_size of 0 omits the
/// dense layer; callers include the CTC blank in codec_size.
std::int64_t param_count(const ArchitectureSpec& spec, std::int64_t codec_size);

/// "conv3x3,f=16:...:pool2x2:lstm650:dropout0.5"
std::string network_string(const LayerLayout& layout);
/// Inverse of network_string. Throws std::invalid_argument on malformed input.
LayerLayout parse_network_string(std::string_view text);

/// Canonical descriptor (keys sorted, fixed schema tag).
nlohmann::json emit(const ArchitectureSpec& spec);
/// Reads a descriptor or a bare spec object ({"input", "N", "R", "K", "P", "M", "dropout"}).
ArchitectureSpec parse_spec(const nlohmann::json& j);

struct SearchGrid {
  std::vector<InputConfig> inputs;
  std::vector<std::pair<int, double>> widths;  // (N, R)
  int k_min = 2;
  int k_max = 15;
  std::vector<int> pools{1, 2};
  std::vector<int> lstm{200};
  double dropout = 0.5;
};

/// The full search space: four inputs, the six (N, R) pairs, K in [2, 15], P in {1, 2}.
SearchGrid full_search_grid();

SearchGrid parse_grid(const nlohmann::json& j);
nlohmann::json grid_to_json(const SearchGrid& grid);

struct GridEnumeration {
  std::vector<ArchitectureSpec> specs;  // valid specs, lexicographic order
  std::size_t candidates = 0;           // size of the Cartesian product
  std::size_t excluded = 0;             // candidates failing validation
};

/// Cartesian product inputs x widths x K x P in lexicographic order
/// (input, N, R, K, P); duplicates in the grid sets are removed first.
GridEnumeration enumerate_grid(const SearchGrid& grid);

}  // namespace ocrpipe
