#include "ocrpipe/nags.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace ocrpipe {

namespace {

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

// Shortest decimal text that reads back to the same double.
std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

template <typename T>
T parse_number(std::string_view text, std::string_view what) {
  T value{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw std::invalid_argument("network string: bad " + std::string(what) + " '" +
                                std::string(text) + "'");
  }
  return value;
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> breaches)
    : std::invalid_argument("invalid architecture: " + join(breaches, "; ")),
      breaches_(std::move(breaches)) {}

ArchitectureSpec calamari_default_spec() { return {}; }

ArchitectureSpec psi_spec() {
  ArchitectureSpec s;
  s.N = 124;
  s.R = 1.5;
  s.K = 6;
  s.P = 1;
  s.M = {650};
  s.dropout = 0.5;
  return s;
}

std::vector<int> filter_counts(int N, double R, int K) {
  if (K < 1) return {};
  std::vector<int> f(static_cast<std::size_t>(K));
  f.back() = N;
  for (int i = K - 2; i >= 0; --i) {
    f[i] = std::max(static_cast<int>(std::floor(double(f[i + 1]) / R)), 8);
  }
  return f;
}

std::vector<std::string> validate(const ArchitectureSpec& spec) {
  std::vector<std::string> breaches;
  if (spec.K < 1) breaches.push_back("K must be >= 1");
  if (spec.P < 0 || spec.P > 2) breaches.push_back("P must be 0, 1 or 2");
  if (spec.P > spec.K) breaches.push_back("P must not exceed K");
  if (!(spec.R > 1.0)) breaches.push_back("R must be > 1");
  if (spec.N < 8) breaches.push_back("N must be >= 8");
  if (spec.P >= 0 && spec.P <= 2 && spec.input.target_height % (1 << spec.P) != 0) {
    breaches.push_back("input height " + std::to_string(spec.input.target_height) +
                       " not divisible by 2^P");
  }
  if (!(spec.dropout >= 0.0 && spec.dropout < 1.0)) breaches.push_back("dropout must be in [0, 1)");
  for (int u : spec.M) {
    if (u < 1) {
      breaches.push_back("LSTM unit counts must be >= 1");
      break;
    }
  }
  if (spec.K >= 1 && spec.R > 1.0) {
    for (int f : filter_counts(spec.N, spec.R, spec.K)) {
      if (f < 8) {
        breaches.push_back("filter count below 8");
        break;
      }
    }
  }
  return breaches;
}

std::vector<std::string> warnings(const ArchitectureSpec& spec) {
  std::vector<std::string> out;
  if (spec.M.size() > 1) {
    out.push_back("stacked LSTMs (" + std::to_string(spec.M.size()) +
                  " cells) trained markedly worse in the reference experiments");
  }
  if (spec.P == 0) out.push_back("P=0 is excluded from the default search grid");
  return out;
}

LayerLayout layout(const ArchitectureSpec& spec) {
  if (auto breaches = validate(spec); !breaches.empty()) throw ValidationError(std::move(breaches));
  const auto filters = filter_counts(spec.N, spec.R, spec.K);
  const Layer pool{LayerKind::pool, 2, 2, 0};
  LayerLayout out;
  for (int i = 0; i < spec.K; ++i) {
    if (i == spec.K - 1 && spec.P == 2) out.layers.push_back(pool);
    out.layers.push_back({LayerKind::conv, 3, 1, filters[i]});
  }
  if (spec.P >= 1) out.layers.push_back(pool);
  for (int units : spec.M) out.layers.push_back({LayerKind::lstm, 0, 0, units});
  out.dropout = spec.dropout;
  return out;
}

std::int64_t param_count(const ArchitectureSpec& spec, std::int64_t codec_size) {
  if (auto breaches = validate(spec); !breaches.empty()) throw ValidationError(std::move(breaches));
  const auto filters = filter_counts(spec.N, spec.R, spec.K);
  std::int64_t total = 0;
  std::int64_t channels = 1;
  for (int f : filters) {
    total += 9 * channels * f + f;
    channels = f;
  }
  std::int64_t features = channels * (spec.input.target_height >> spec.P);
  for (int units : spec.M) {
    const std::int64_t u = units;
    total += 4 * (u * (features + u) + u);
    features = u;
  }
  if (codec_size > 0) total += features * codec_size + codec_size;
  return total;
}

std::string network_string(const LayerLayout& layout) {
  std::vector<std::string> tokens;
  for (const auto& layer : layout.layers) {
    switch (layer.kind) {
      case LayerKind::conv:
        tokens.push_back("conv" + std::to_string(layer.kernel) + "x" + std::to_string(layer.kernel) +
                         ",f=" + std::to_string(layer.size));
        break;
      case LayerKind::pool:
        tokens.push_back("pool" + std::to_string(layer.kernel) + "x" + std::to_string(layer.kernel));
        break;
      case LayerKind::lstm:
        tokens.push_back("lstm" + std::to_string(layer.size));
        break;
    }
  }
  tokens.push_back("dropout" + format_number(layout.dropout));
  return join(tokens, ":");
}

LayerLayout parse_network_string(std::string_view text) {
  LayerLayout out;
  bool saw_dropout = false;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find(':', start), text.size());
    const std::string_view tok = text.substr(start, end - start);
    if (saw_dropout) throw std::invalid_argument("network string: tokens after dropout");
    if (starts_with(tok, "conv")) {
      const auto x = tok.find('x');
      const auto comma = tok.find(",f=");
      if (x == std::string_view::npos || comma == std::string_view::npos || comma < x) {
        throw std::invalid_argument("network string: bad conv token '" + std::string(tok) + "'");
      }
      const int k = parse_number<int>(tok.substr(4, x - 4), "kernel");
      if (parse_number<int>(tok.substr(x + 1, comma - x - 1), "kernel") != k) {
        throw std::invalid_argument("network string: only square kernels are supported");
      }
      out.layers.push_back({LayerKind::conv, k, 1, parse_number<int>(tok.substr(comma + 3), "filters")});
    } else if (starts_with(tok, "pool")) {
      const auto x = tok.find('x');
      if (x == std::string_view::npos) {
        throw std::invalid_argument("network string: bad pool token '" + std::string(tok) + "'");
      }
      const int k = parse_number<int>(tok.substr(4, x - 4), "pool size");
      if (parse_number<int>(tok.substr(x + 1), "pool size") != k) {
        throw std::invalid_argument("network string: only square pools are supported");
      }
      out.layers.push_back({LayerKind::pool, k, k, 0});
    } else if (starts_with(tok, "lstm")) {
      out.layers.push_back({LayerKind::lstm, 0, 0, parse_number<int>(tok.substr(4), "units")});
    } else if (starts_with(tok, "dropout")) {
      out.dropout = parse_number<double>(tok.substr(7), "dropout");
      saw_dropout = true;
    } else {
      throw std::invalid_argument("network string: unknown token '" + std::string(tok) + "'");
    }
    start = end + 1;
  }
  if (!saw_dropout) throw std::invalid_argument("network string: missing dropout token");
  return out;
}

nlohmann::json emit(const ArchitectureSpec& spec) {
  const auto lay = layout(spec);
  return nlohmann::json{
      {"schema", "ocrpipe.arch/1"},
      {"input", std::string(to_string(spec.input.name))},
      {"height", spec.input.target_height},
      {"binarize", spec.input.binarize},
      {"N", spec.N},
      {"R", spec.R},
      {"K", spec.K},
      {"P", spec.P},
      {"M", spec.M},
      {"dropout", spec.dropout},
      {"filters", filter_counts(spec.N, spec.R, spec.K)},
      {"network", network_string(lay)},
  };
}

ArchitectureSpec parse_spec(const nlohmann::json& j) {
  ArchitectureSpec s;
  s.input = InputConfig::parse(j.at("input").get<std::string>());
  s.N = j.at("N").get<int>();
  s.R = j.at("R").get<double>();
  s.K = j.at("K").get<int>();
  s.P = j.at("P").get<int>();
  s.M = j.value("M", std::vector<int>{200});
  s.dropout = j.value("dropout", 0.5);
  if (auto breaches = validate(s); !breaches.empty()) throw ValidationError(std::move(breaches));
  if (j.contains("network") && j.at("network").get<std::string>() != network_string(layout(s))) {
    throw std::invalid_argument("descriptor network string does not match its parameters");
  }
  return s;
}

SearchGrid full_search_grid() {
  SearchGrid g;
  g.inputs = {InputConfig::from_name(InputName::gray48), InputConfig::from_name(InputName::bin48),
              InputConfig::from_name(InputName::gray64), InputConfig::from_name(InputName::bin64)};
  g.widths = {{64, 1.5}, {124, 1.5}, {240, 1.5}, {64, 2.0}, {128, 2.0}, {256, 2.0}};
  g.k_min = 2;
  g.k_max = 15;
  g.pools = {1, 2};
  return g;
}

SearchGrid parse_grid(const nlohmann::json& j) {
  SearchGrid g;
  for (const auto& name : j.at("inputs")) g.inputs.push_back(InputConfig::parse(name.get<std::string>()));
  for (const auto& w : j.at("widths")) {
    if (w.is_array()) {
      g.widths.emplace_back(w.at(0).get<int>(), w.at(1).get<double>());
    } else {
      g.widths.emplace_back(w.at("N").get<int>(), w.at("R").get<double>());
    }
  }
  const auto& k = j.at("K");
  if (k.is_array()) {
    g.k_min = k.at(0).get<int>();
    g.k_max = k.at(1).get<int>();
  } else {
    g.k_min = k.at("min").get<int>();
    g.k_max = k.at("max").get<int>();
  }
  g.pools = j.at("P").get<std::vector<int>>();
  g.lstm = j.value("M", std::vector<int>{200});
  g.dropout = j.value("dropout", 0.5);
  if (g.inputs.empty() || g.widths.empty() || g.pools.empty() || g.k_min > g.k_max) {
    throw std::invalid_argument("search grid: every dimension must be non-empty");
  }
  return g;
}

nlohmann::json grid_to_json(const SearchGrid& grid) {
  nlohmann::json inputs = nlohmann::json::array();
  for (const auto& in : grid.inputs) inputs.push_back(std::string(to_string(in.name)));
  nlohmann::json widths = nlohmann::json::array();
  for (const auto& [n, r] : grid.widths) widths.push_back({{"N", n}, {"R", r}});
  return {{"inputs", inputs},     {"widths", widths}, {"K", {{"min", grid.k_min}, {"max", grid.k_max}}},
          {"P", grid.pools},      {"M", grid.lstm},   {"dropout", grid.dropout}};
}

GridEnumeration enumerate_grid(const SearchGrid& grid) {
  auto inputs = grid.inputs;
  std::sort(inputs.begin(), inputs.end(),
            [](const InputConfig& a, const InputConfig& b) { return a.name < b.name; });
  inputs.erase(std::unique(inputs.begin(), inputs.end()), inputs.end());
  auto widths = grid.widths;
  std::sort(widths.begin(), widths.end());
  widths.erase(std::unique(widths.begin(), widths.end()), widths.end());
  auto pools = grid.pools;
  std::sort(pools.begin(), pools.end());
  pools.erase(std::unique(pools.begin(), pools.end()), pools.end());

  GridEnumeration out;
  for (const auto& input : inputs) {
    for (const auto& [n, r] : widths) {
      for (int k = grid.k_min; k <= grid.k_max; ++k) {
        for (int p : pools) {
          ++out.candidates;
          ArchitectureSpec spec{input, n, r, k, p, grid.lstm, grid.dropout};
          if (validate(spec).empty()) {
            out.specs.push_back(std::move(spec));
          } else {
            ++out.excluded;
          }
        }
      }
    }
  }
  return out;
}

}  // namespace ocrpipe
