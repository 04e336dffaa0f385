#include "ocrpipe/evalcer.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "codec_data.hpp"
#include "ocrpipe/utf8.hpp"

namespace ocrpipe {

namespace fs = std::filesystem;
using nlohmann::json;

std::size_t levenshtein(std::u32string_view a, std::u32string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  return levenshtein(std::u32string_view(utf8_decode(a)), std::u32string_view(utf8_decode(b)));
}

// --- codec -------------------------------------------------------------------

Codec::Codec(std::u32string chars) : chars_(std::move(chars)) {
  for (char32_t c : chars_) {
    if (!lookup_.insert(c).second) {
      throw std::invalid_argument("codec: duplicate character U+" + [c] {
        char buf[16];
        auto r = std::to_chars(buf, buf + sizeof buf, static_cast<unsigned long>(c), 16);
        return std::string(buf, r.ptr);
      }());
    }
  }
}

Codec parse_codec(std::string_view text) {
  std::u32string chars;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;

    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string_view::npos || line[first] == '#') continue;
    line.remove_prefix(first);
    if (line.size() < 3 || line[0] != 'U' || line[1] != '+') {
      throw std::invalid_argument("codec line " + std::to_string(line_no) + ": expected U+XXXX");
    }
    unsigned long cp = 0;
    const char* b = line.data() + 2;
    const char* e = line.data() + line.size();
    auto [ptr, ec] = std::from_chars(b, e, cp, 16);
    if (ec != std::errc() || ptr == b || cp > 0x10FFFF || (ptr != e && *ptr != ' ' && *ptr != '\t' && *ptr != '\r')) {
      throw std::invalid_argument("codec line " + std::to_string(line_no) + ": bad code point");
    }
    chars.push_back(static_cast<char32_t>(cp));
  }
  return Codec(std::move(chars));
}

Codec load_codec(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open codec " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_codec(ss.str());
}

const Codec& default_codec() {
  static const Codec codec = parse_codec(detail::kDefaultCodecText);
  return codec;
}

std::vector<CodecViolation> codec_check(std::string_view text, const Codec& codec) {
  std::vector<CodecViolation> out;
  const std::u32string chars = utf8_decode(text);
  for (std::size_t i = 0; i < chars.size(); ++i) {
    if (!codec.contains(chars[i])) out.push_back({i, chars[i]});
  }
  return out;
}

// --- harmonization -------------------------------------------------------------

namespace {

bool is_space(char32_t c) {
  switch (c) {
    case U' ': case U'\t': case U'\n': case U'\r': case U'\v': case U'\f':
    case 0x00A0: case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return c >= 0x2000 && c <= 0x200A;
  }
}

std::u32string apply_rule(std::u32string_view text, const HarmonizationRule& rule) {
  std::u32string out;
  out.reserve(text.size());
  switch (rule.kind) {
    case RuleKind::map_char:
      for (char32_t c : text) {
        if (rule.from.find(c) != std::u32string::npos) {
          out += rule.to;
        } else {
          out.push_back(c);
        }
      }
      break;
    case RuleKind::map_string: {
      if (rule.from.empty()) return std::u32string(text);
      std::size_t i = 0;
      while (i < text.size()) {
        if (text.substr(i, rule.from.size()) == rule.from) {
          out += rule.to;
          i += rule.from.size();
        } else {
          out.push_back(text[i++]);
        }
      }
      break;
    }
    case RuleKind::collapse_whitespace: {
      bool in_space = false;
      for (char32_t c : text) {
        if (is_space(c)) {
          if (!in_space) out.push_back(U' ');
          in_space = true;
        } else {
          out.push_back(c);
          in_space = false;
        }
      }
      break;
    }
    case RuleKind::strip_ends: {
      std::size_t b = 0, e = text.size();
      while (b < e && is_space(text[b])) ++b;
      while (e > b && is_space(text[e - 1])) --e;
      out.assign(text.substr(b, e - b));
      break;
    }
  }
  return out;
}

HarmonizationRules build_default_rules() {
  HarmonizationRules r;
  auto str = [&](std::u32string from, std::u32string to) {
    r.rules.push_back({RuleKind::map_string, std::move(from), std::move(to)});
  };
  auto chr = [&](std::u32string from, std::u32string to) {
    r.rules.push_back({RuleKind::map_char, std::move(from), std::move(to)});
  };
  // superscript e (U+0364) and combining diaeresis / tilde / ring onto the
  // precomposed letters the codec carries
  str(U"a\u0364", U"\u00E4");
  str(U"o\u0364", U"\u00F6");
  str(U"u\u0364", U"\u00FC");
  str(U"A\u0364", U"\u00C4");
  str(U"O\u0364", U"\u00D6");
  str(U"U\u0364", U"\u00DC");
  str(U"a\u0308", U"\u00E4");
  str(U"o\u0308", U"\u00F6");
  str(U"u\u0308", U"\u00FC");
  str(U"e\u0308", U"\u00EB");
  str(U"A\u0308", U"\u00C4");
  str(U"O\u0308", U"\u00D6");
  str(U"U\u0308", U"\u00DC");
  str(U"a\u0303", U"\u00E3");
  str(U"e\u0303", U"\u1EBD");
  str(U"i\u0303", U"\u0129");
  str(U"n\u0303", U"\u00F1");
  str(U"o\u0303", U"\u00F5");
  str(U"u\u0303", U"\u0169");
  str(U"u\u030A", U"\u016F");
  str(U"a\u030A", U"\u00E5");
  chr(U"ſ", U"s");
  chr(U"‐‑‒–—―−⸗¬", U"-");
  chr(U"‘’‛′`´“”‟\"″", U"'");
  chr(U"„", U"‚");
  chr(U"‹", U"«");
  chr(U"›", U"»");
  r.rules.push_back({RuleKind::collapse_whitespace, {}, {}});
  r.rules.push_back({RuleKind::strip_ends, {}, {}});
  return r;
}

const std::map<std::string, RuleKind>& kind_names() {
  static const std::map<std::string, RuleKind> names{
      {"map_char", RuleKind::map_char},
      {"map_string", RuleKind::map_string},
      {"collapse_whitespace", RuleKind::collapse_whitespace},
      {"strip_ends", RuleKind::strip_ends},
  };
  return names;
}

}  // namespace

const HarmonizationRules& default_rules() {
  static const HarmonizationRules rules = build_default_rules();
  return rules;
}

HarmonizationRules parse_rules(const json& j) {
  const json& list = j.is_object() ? j.at("rules") : j;
  if (!list.is_array()) throw std::invalid_argument("rules: expected an array");
  HarmonizationRules out;
  for (const auto& item : list) {
    const auto name = item.at("kind").get<std::string>();
    auto it = kind_names().find(name);
    if (it == kind_names().end()) throw std::invalid_argument("rules: unknown kind '" + name + "'");
    HarmonizationRule rule{it->second, {}, {}};
    if (item.contains("from")) rule.from = utf8_decode(item.at("from").get<std::string>());
    if (item.contains("to")) rule.to = utf8_decode(item.at("to").get<std::string>());
    out.rules.push_back(std::move(rule));
  }
  return out;
}

json rules_to_json(const HarmonizationRules& rules) {
  json list = json::array();
  for (const auto& rule : rules.rules) {
    json item;
    for (const auto& [name, kind] : kind_names()) {
      if (kind == rule.kind) item["kind"] = name;
    }
    if (rule.kind == RuleKind::map_char || rule.kind == RuleKind::map_string) {
      item["from"] = utf8_encode(rule.from);
      item["to"] = utf8_encode(rule.to);
    }
    list.push_back(std::move(item));
  }
  return json{{"rules", std::move(list)}};
}

std::u32string harmonize(std::u32string_view text, const HarmonizationRules& rules) {
  std::u32string cur(text);
  for (const auto& rule : rules.rules) cur = apply_rule(cur, rule);
  return cur;
}

std::string harmonize(std::string_view text, const HarmonizationRules& rules) {
  return utf8_encode(harmonize(std::u32string_view(utf8_decode(text)), rules));
}

// --- CER ---------------------------------------------------------------------------

EvalReport cer(const std::vector<TextPair>& pairs, const std::optional<HarmonizationRules>& rules) {
  EvalReport report;
  report.lines.reserve(pairs.size());
  double ratio_sum = 0.0;
  std::size_t ratio_n = 0;
  for (const auto& p : pairs) {
    std::u32string gt = utf8_decode(p.ground_truth);
    std::u32string pred = utf8_decode(p.prediction);
    if (rules) {
      gt = harmonize(std::u32string_view(gt), *rules);
      pred = harmonize(std::u32string_view(pred), *rules);
    }
    const std::size_t d = levenshtein(std::u32string_view(gt), std::u32string_view(pred));
    report.lines.push_back({p.line_id, d, gt.size()});
    report.total_distance += d;
    report.total_length += gt.size();
    if (!gt.empty()) {
      ratio_sum += static_cast<double>(d) / static_cast<double>(gt.size());
      ++ratio_n;
    }
  }
  if (report.total_length == 0) throw std::invalid_argument("empty ground truth");
  report.cer = static_cast<double>(report.total_distance) / static_cast<double>(report.total_length);
  report.per_line_mean = ratio_sum / static_cast<double>(ratio_n);
  return report;
}

json report_to_json(const EvalReport& report) {
  json lines = json::array();
  for (const auto& l : report.lines) {
    lines.push_back({{"line_id", l.line_id}, {"distance", l.distance}, {"gt_length", l.gt_length}});
  }
  return json{
      {"lines", std::move(lines)},
      {"total_distance", report.total_distance},
      {"total_length", report.total_length},
      {"cer", report.cer},
      {"per_line_mean_noncanonical", report.per_line_mean},
  };
}

std::string report_to_csv(const EvalReport& report) {
  auto quote = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
      if (c == '"') out += '"';
      out += c;
    }
    return out + "\"";
  };
  std::ostringstream os;
  os.precision(17);
  os << "line_id,distance,gt_length,cer\n";
  for (const auto& l : report.lines) {
    os << quote(l.line_id) << ',' << l.distance << ',' << l.gt_length << ',';
    if (l.gt_length > 0) os << static_cast<double>(l.distance) / static_cast<double>(l.gt_length);
    os << '\n';
  }
  os << "__total__," << report.total_distance << ',' << report.total_length << ',' << report.cer << '\n';
  return os.str();
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string s = ss.str();
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  return s;
}

namespace {

bool strip_suffix(std::string& s, std::string_view suffix) {
  if (s.size() < suffix.size() || s.compare(s.size() - suffix.size(), suffix.size(), suffix) != 0) {
    return false;
  }
  s.erase(s.size() - suffix.size());
  return true;
}

}  // namespace

std::vector<TextPair> read_pair_directory(const fs::path& dir) {
  std::map<std::string, fs::path> gts;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string name = entry.path().filename().string();
    if (strip_suffix(name, ".gt.txt")) gts.emplace(name, entry.path());
  }
  std::vector<TextPair> out;
  for (const auto& [name, gt_path] : gts) {
    const fs::path pred_path = dir / (name + ".pred.txt");
    if (!fs::exists(pred_path)) continue;
    out.push_back({name, read_text_file(gt_path), read_text_file(pred_path)});
  }
  return out;
}

std::vector<TextPair> read_pair_tsv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<TextPair> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::size_t start = 0;
    for (;;) {
      const auto tab = line.find('\t', start);
      cols.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (cols.size() == 2) {
      out.push_back({std::to_string(line_no), cols[0], cols[1]});
    } else if (cols.size() == 3) {
      out.push_back({cols[0], cols[1], cols[2]});
    } else {
      throw std::invalid_argument(path.string() + ":" + std::to_string(line_no) + ": expected 2 or 3 columns");
    }
  }
  return out;
}

}  // namespace ocrpipe
