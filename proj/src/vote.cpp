#include "ocrpipe/vote.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <stdexcept>

#include "json.hpp"
#include "ocrpipe/evalcer.hpp"
#include "ocrpipe/utf8.hpp"

namespace ocrpipe {

namespace fs = std::filesystem;

std::vector<AlignColumn> align_pair(std::u32string_view a, std::u32string_view b) {
  const std::size_t n = a.size(), m = b.size();
  // suffix costs, so the forward walk can apply the preference order greedily
  std::vector<std::size_t> cost((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return cost[i * (m + 1) + j]; };
  for (std::size_t i = n + 1; i-- > 0;) {
    for (std::size_t j = m + 1; j-- > 0;) {
      if (i == n) {
        at(i, j) = m - j;
      } else if (j == m) {
        at(i, j) = n - i;
      } else {
        at(i, j) = std::min({at(i + 1, j + 1) + (a[i] == b[j] ? 0 : 1), at(i + 1, j) + 1, at(i, j + 1) + 1});
      }
    }
  }

  std::vector<AlignColumn> out;
  out.reserve(std::max(n, m));
  std::size_t i = 0, j = 0;
  while (i < n || j < m) {
    const std::size_t here = at(i, j);
    if (i < n && j < m && a[i] == b[j] && at(i + 1, j + 1) == here) {
      out.push_back({EditOp::match, a[i], b[j]});
      ++i, ++j;
    } else if (i < n && j < m && a[i] != b[j] && at(i + 1, j + 1) + 1 == here) {
      out.push_back({EditOp::substitute, a[i], b[j]});
      ++i, ++j;
    } else if (i < n && at(i + 1, j) + 1 == here) {
      out.push_back({EditOp::remove, a[i], kEpsilon});
      ++i;
    } else {
      out.push_back({EditOp::insert, kEpsilon, b[j]});
      ++j;
    }
  }
  return out;
}

std::size_t alignment_cost(const std::vector<AlignColumn>& alignment) {
  return static_cast<std::size_t>(std::count_if(alignment.begin(), alignment.end(),
                                                [](const AlignColumn& c) { return c.op != EditOp::match; }));
}

ConfusionNetwork confusion_network(const std::vector<std::u32string>& hypotheses) {
  if (hypotheses.empty()) return {};
  const std::size_t H = hypotheses.size();
  const std::u32string& anchor = hypotheses[0];
  const std::size_t n = anchor.size();

  // anchor[i] owns one column; gaps[g] holds the insertion columns in front of
  // anchor position g (g == n: after the last symbol)
  std::vector<std::vector<char32_t>> anchored(n, std::vector<char32_t>(H, kEpsilon));
  std::vector<std::vector<std::vector<char32_t>>> gaps(n + 1);
  for (std::size_t i = 0; i < n; ++i) anchored[i][0] = anchor[i];

  for (std::size_t h = 1; h < H; ++h) {
    const auto alignment = align_pair(anchor, hypotheses[h]);
    std::size_t pos = 0;   // next anchor position
    std::size_t fill = 0;  // insertions already placed in gaps[pos]
    for (const auto& col : alignment) {
      if (col.op == EditOp::insert) {
        auto& gap = gaps[pos];
        if (fill == gap.size()) gap.emplace_back(H, kEpsilon);
        gap[fill++][h] = col.b;
      } else {
        anchored[pos][h] = col.b;  // kEpsilon for a deletion
        ++pos;
        fill = 0;
      }
    }
  }

  ConfusionNetwork net;
  for (std::size_t g = 0; g <= n; ++g) {
    for (auto& column : gaps[g]) net.push_back(std::move(column));
    if (g < n) net.push_back(std::move(anchored[g]));
  }
  return net;
}

std::u32string vote(const std::vector<std::u32string>& hypotheses, const std::vector<double>& confidences) {
  if (hypotheses.empty()) throw std::invalid_argument("vote: no hypotheses");
  if (!confidences.empty() && confidences.size() != hypotheses.size()) {
    throw std::invalid_argument("vote: confidences must match hypotheses");
  }
  if (hypotheses.size() == 1) return hypotheses[0];

  struct Tally {
    std::size_t count = 0;
    double confidence = 0.0;
    std::size_t first = 0;
  };

  std::u32string out;
  for (const auto& column : confusion_network(hypotheses)) {
    std::map<char32_t, Tally> tally;
    for (std::size_t h = 0; h < column.size(); ++h) {
      auto [it, fresh] = tally.try_emplace(column[h]);
      if (fresh) it->second.first = h;
      ++it->second.count;
      if (!confidences.empty()) it->second.confidence += confidences[h];
    }
    auto best = tally.begin();
    for (auto it = std::next(tally.begin()); it != tally.end(); ++it) {
      const Tally& c = it->second;
      const Tally& b = best->second;
      if (c.count != b.count) {
        if (c.count > b.count) best = it;
      } else if (c.confidence != b.confidence) {
        if (c.confidence > b.confidence) best = it;
      } else if (c.first < b.first) {
        best = it;
      }
    }
    if (best->first != kEpsilon) out.push_back(best->first);
  }
  return out;
}

std::string vote(const FoldPredictions& preds) {
  std::vector<std::u32string> hyps;
  hyps.reserve(preds.hypotheses.size());
  for (const auto& h : preds.hypotheses) hyps.push_back(utf8_decode(h));
  return utf8_encode(vote(hyps, preds.confidences));
}

std::vector<FoldPredictions> read_fold_directory(const fs::path& dir) {
  std::map<std::string, std::map<int, fs::path>> groups;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    constexpr std::string_view suffix = ".pred.txt";
    if (name.size() <= suffix.size() || name.compare(name.size() - suffix.size(), suffix.size(), suffix) != 0) {
      continue;
    }
    const std::string stem = name.substr(0, name.size() - suffix.size());
    const auto dot = stem.rfind(".fold");
    if (dot == std::string::npos) continue;
    const std::string digits = stem.substr(dot + 5);
    if (digits.empty() || !std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      continue;
    }
    groups[stem.substr(0, dot)][std::stoi(digits)] = entry.path();
  }
  std::vector<FoldPredictions> out;
  for (const auto& [line_id, folds] : groups) {
    FoldPredictions p{line_id, {}, {}};
    for (const auto& [fold, path] : folds) p.hypotheses.push_back(read_text_file(path));
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<FoldPredictions> read_fold_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const auto j = nlohmann::json::parse(in);
  if (!j.is_array()) throw std::invalid_argument(path.string() + ": expected a JSON array");
  std::vector<FoldPredictions> out;
  for (const auto& item : j) {
    FoldPredictions p;
    p.line_id = item.value("line_id", std::to_string(out.size()));
    p.hypotheses = item.at("hypotheses").get<std::vector<std::string>>();
    if (item.contains("confidences")) p.confidences = item.at("confidences").get<std::vector<double>>();
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace ocrpipe
