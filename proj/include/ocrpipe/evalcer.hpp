#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace ocrpipe {

/// Unit-cost edit distance over Unicode scalar values.
std::size_t levenshtein(std::u32string_view a, std::u32string_view b);
/// UTF-8 convenience overload.
std::size_t levenshtein(std::string_view a, std::string_view b);

// --- codec -------------------------------------------------------------------

/// Closed, ordered character set.
class Codec {
 public:
  Codec() = default;
  /// Throws std::invalid_argument on duplicates.
  explicit Codec(std::u32string chars);

  const std::u32string& chars() const { return chars_; }
  std::size_t size() const { return chars_.size(); }
  bool contains(char32_t c) const { return lookup_.count(c) != 0; }

 private:
  std::u32string chars_;
  std::set<char32_t> lookup_;
};

/// Parses the codec file format: one "U+XXXX ..." entry per line, '#' comments.
Codec parse_codec(std::string_view text);
Codec load_codec(const std::filesystem::path& path);
/// The 144-entry historical-newspaper codec shipped in data/codec.txt.
const Codec& default_codec();

struct CodecViolation {
  std::size_t position;  // index in scalar values
  char32_t character;
  friend bool operator==(const CodecViolation&, const CodecViolation&) = default;
};

std::vector<CodecViolation> codec_check(std::string_view text, const Codec& codec);

// --- harmonization -------------------------------------------------------------

enum class RuleKind { map_char, map_string, collapse_whitespace, strip_ends };

/// map_char replaces every character listed in `from` by `to` (possibly empty);
/// map_string replaces every non-overlapping occurrence of `from`, left to right.
struct HarmonizationRule {
  RuleKind kind;
  std::u32string from;
  std::u32string to;
};

struct HarmonizationRules {
  std::vector<HarmonizationRule> rules;  // applied in order
};

/// Long s to s, dash variants to '-', quote unification, combining-mark
/// composition for the codec's umlauts, whitespace collapse and trimming.
const HarmonizationRules& default_rules();

HarmonizationRules parse_rules(const nlohmann::json& j);
nlohmann::json rules_to_json(const HarmonizationRules& rules);

std::u32string harmonize(std::u32string_view text, const HarmonizationRules& rules);
std::string harmonize(std::string_view text, const HarmonizationRules& rules);

// --- CER ---------------------------------------------------------------------------

struct TextPair {
  std::string line_id;
  std::string ground_truth;
  std::string prediction;
};

struct LineRecord {
  std::string line_id;
  std::size_t distance;   // L_i
  std::size_t gt_length;  // C_i
};

struct EvalReport {
  std::vector<LineRecord> lines;
  std::size_t total_distance = 0;
  std::size_t total_length = 0;
  double cer = 0.0;  // sum L_i / sum C_i
  /// Mean of L_i / C_i over lines with C_i > 0. Not the canonical measure;
  /// reported for comparison only.
  double per_line_mean = 0.0;
};

/// Canonical, length-weighted CER. Both sides are harmonized when rules are
/// given. Throws std::invalid_argument("empty ground truth") when sum C_i = 0.
EvalReport cer(const std::vector<TextPair>& pairs,
               const std::optional<HarmonizationRules>& rules = std::nullopt);

nlohmann::json report_to_json(const EvalReport& report);
std::string report_to_csv(const EvalReport& report);

/// Pairs `<name>.gt.txt` with `<name>.pred.txt` in a directory; unmatched
/// files are skipped. Trailing line breaks are removed.
std::vector<TextPair> read_pair_directory(const std::filesystem::path& dir);
/// Two-column (ground truth, prediction) or three-column (id, gt, pred) TSV.
std::vector<TextPair> read_pair_tsv(const std::filesystem::path& path);

/// Whole file contents with trailing CR/LF removed.
std::string read_text_file(const std::filesystem::path& path);

}  // namespace ocrpipe
