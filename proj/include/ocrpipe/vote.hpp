#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ocrpipe {

/// Placeholder for "no symbol" in alignments and confusion networks.
inline constexpr char32_t kEpsilon = 0xFFFFFFFF;

enum class EditOp { match, substitute, insert, remove };

/// One alignment column. `a` or `b` is kEpsilon for insertions and deletions
/// (insert: symbol only in b; remove: symbol only in a).
struct AlignColumn {
  EditOp op;
  char32_t a;
  char32_t b;
  friend bool operator==(const AlignColumn&, const AlignColumn&) = default;
};

/// Minimal-cost alignment. Among optimal alignments the one preferring
/// match, then substitution, then deletion is returned (read left to right).
std::vector<AlignColumn> align_pair(std::u32string_view a, std::u32string_view b);

/// Number of non-match columns.
std::size_t alignment_cost(const std::vector<AlignColumn>& alignment);

struct FoldPredictions {
  std::string line_id;
  std::vector<std::string> hypotheses;  // fold order
  std::vector<double> confidences;      // empty or one per hypothesis
};

/// Column-per-slot network; cell [col][h] is hypothesis h's symbol or kEpsilon.
using ConfusionNetwork = std::vector<std::vector<char32_t>>;

/// Progressive alignment of every hypothesis against hypothesis 0.
ConfusionNetwork confusion_network(const std::vector<std::u32string>& hypotheses);

/// Plurality per column (epsilon votes too), ties broken by summed confidence,
/// then by the lowest fold index among the tied symbols.
std::u32string vote(const std::vector<std::u32string>& hypotheses,
                    const std::vector<double>& confidences = {});
/// Throws std::invalid_argument without hypotheses or on a confidence size mismatch.
std::string vote(const FoldPredictions& preds);

/// Groups `<name>.fold<i>.pred.txt` files by name, hypotheses ordered by i.
std::vector<FoldPredictions> read_fold_directory(const std::filesystem::path& dir);
/// JSON array of {"line_id", "hypotheses", ["confidences"]}.
std::vector<FoldPredictions> read_fold_json(const std::filesystem::path& path);

}  // namespace ocrpipe
