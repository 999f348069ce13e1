#include "intentscan/segmenter.hpp"

#include <algorithm>
#include <set>

#include "intentscan/errors.hpp"
#include "intentscan/hash.hpp"
#include "intentscan/io.hpp"
#include "intentscan/utf8.hpp"

namespace intentscan {

using nlohmann::json;

namespace {

bool is_space(char32_t c) {
  switch (c) {
    case U' ': case U'\t': case U'\n': case U'\r': case U'\v': case U'\f':
    case 0x00A0: case 0x1680: case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return c >= 0x2000 && c <= 0x200A;
  }
}

bool is_digit(char32_t c) { return c >= U'0' && c <= U'9'; }

bool is_lower(char32_t c) {
  return (c >= U'a' && c <= U'z') || (c >= 0xDF && c <= 0xFF && c != 0xF7);
}

char32_t to_lower(char32_t c) {
  if (c >= U'A' && c <= U'Z') return c + 32;
  if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 32;
  return c;
}

bool is_closer(char32_t c) {
  return c == U')' || c == U']' || c == U'"' || c == U'\'' || c == 0x201D || c == 0x2019;
}

bool is_bullet_glyph(char32_t c) {
  return c == 0x2022 || c == 0x25E6 || c == 0x25AA || c == 0x2023 || c == 0x25CF || c == 0x00B7 ||
         c == 0x2043;
}

std::vector<std::u32string> decode_all(const std::vector<std::string>& items) {
  std::vector<std::u32string> out;
  out.reserve(items.size());
  for (const auto& s : items) out.push_back(utf8::decode(s));
  // Longest first so multi-character delimiters win over their prefixes.
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.size() > b.size(); });
  return out;
}

std::size_t match_at(const std::vector<std::u32string>& candidates, const std::u32string& t,
                     std::size_t i) {
  for (const auto& c : candidates) {
    if (!c.empty() && t.compare(i, c.size(), c) == 0) return c.size();
  }
  return 0;
}

class Segmenter {
 public:
  explicit Segmenter(const SegmenterConfig& config)
      : config_(config),
        delimiters_(decode_all(config.extra_delimiters)),
        markers_(decode_all(config.line_start_markers)) {
    for (const auto& a : config.abbreviation_exceptions) abbreviations_.insert(utf8::decode(a));
  }

  // Raw [start, end) pieces before trimming.
  std::vector<std::pair<std::size_t, std::size_t>> split(const std::u32string& t) const {
    std::vector<std::pair<std::size_t, std::size_t>> pieces;
    const std::size_t n = t.size();
    std::size_t piece_start = 0;
    bool line_start = true;
    const auto close = [&](std::size_t end, std::size_t next) {
      pieces.emplace_back(piece_start, end);
      piece_start = next;
    };

    std::size_t i = 0;
    while (i < n) {
      if (const auto len = match_at(delimiters_, t, i)) {
        close(i, i + len);
        line_start = t[i + len - 1] == U'\n';
        i += len;
        continue;
      }
      if (t[i] == U'\n') {
        line_start = true;
        ++i;
        continue;
      }
      if (line_start) {
        if (is_space(t[i])) {
          ++i;
          continue;
        }
        line_start = false;
        if (const auto len = match_at(markers_, t, i); len && (i + len == n || is_space(t[i + len]))) {
          close(i, i + len);
          i += len;
          continue;
        }
        if (config_.numbered_list_markers && is_digit(t[i])) {
          std::size_t j = i;
          while (j < n && is_digit(t[j])) ++j;
          if (j - i <= 3 && j < n && (t[j] == U'.' || t[j] == U')') && (j + 1 == n || is_space(t[j + 1]))) {
            close(i, j + 1);
            i = j + 1;
            continue;
          }
        }
      }
      if (is_terminal(t[i])) {
        std::size_t j = i;
        while (j < n && is_terminal(t[j])) ++j;
        const std::size_t run_end = j;
        while (j < n && is_closer(t[j])) ++j;
        if (breaks_after(t, piece_start, i, run_end, j)) close(j, j);
        i = j;
        continue;
      }
      ++i;
    }
    close(n, n);
    return pieces;
  }

 private:
  bool is_terminal(char32_t c) const {
    return config_.terminal_punctuation.find(c) != std::u32string::npos;
  }

  // Punctuation run t[first, run_end) followed by closers up to `after`.
  bool breaks_after(const std::u32string& t, std::size_t piece_start, std::size_t first,
                    std::size_t run_end, std::size_t after) const {
    const std::size_t n = t.size();
    // "37.5", "e.g", "x.y": punctuation glued to the next character.
    if (after < n && !is_space(t[after]) && !match_at(delimiters_, t, after)) return false;
    if (run_end - first == 1 && t[first] == U'.' && is_abbreviation(t, piece_start, first)) return false;
    std::size_t k = after;
    while (k < n && is_space(t[k]) && t[k] != U'\n') ++k;
    if (k < n && is_lower(t[k])) return false;
    return true;
  }

  bool is_abbreviation(const std::u32string& t, std::size_t piece_start, std::size_t dot) const {
    std::size_t k = dot;
    while (k > piece_start && !is_space(t[k - 1])) --k;
    while (k < dot && (t[k] == U'(' || t[k] == U'[' || t[k] == U'"' || t[k] == U'\'')) ++k;
    std::u32string token;
    for (std::size_t p = k; p <= dot; ++p) token.push_back(to_lower(t[p]));
    return abbreviations_.count(token) > 0;
  }

  const SegmenterConfig& config_;
  std::vector<std::u32string> delimiters_;
  std::vector<std::u32string> markers_;
  std::set<std::u32string> abbreviations_;
};

std::vector<std::string> string_list(const json& j, const char* field) {
  if (!j.is_array()) throw ValidationError(std::string("segmenter config: '") + field + "' must be an array");
  std::vector<std::string> out;
  for (const auto& item : j) {
    if (!item.is_string()) {
      throw ValidationError(std::string("segmenter config: '") + field + "' entries must be strings");
    }
    out.push_back(item.get<std::string>());
  }
  return out;
}

}  // namespace

void SegmenterConfig::validate() const {
  if (terminal_punctuation.empty()) throw ValidationError("segmenter config: terminal_punctuation is empty");
  if (extra_delimiters.empty()) throw ValidationError("segmenter config: extra_delimiters is empty");
  for (const auto& d : extra_delimiters) {
    if (d.empty()) throw ValidationError("segmenter config: empty delimiter");
    utf8::decode(d);
  }
  for (const auto& m : line_start_markers) {
    if (m.empty()) throw ValidationError("segmenter config: empty line-start marker");
  }
  for (const auto& a : abbreviation_exceptions) {
    if (a.empty()) throw ValidationError("segmenter config: empty abbreviation");
    if (std::any_of(a.begin(), a.end(), [](char c) { return c >= 'A' && c <= 'Z'; })) {
      throw ValidationError("segmenter config: abbreviation '" + a + "' must be lowercase");
    }
  }
  if (min_segment_chars == 0) throw ValidationError("segmenter config: min_segment_chars must be >= 1");
}

json SegmenterConfig::to_json() const {
  return {{"terminal_punctuation", utf8::encode(terminal_punctuation)},
          {"extra_delimiters", extra_delimiters},
          {"line_start_markers", line_start_markers},
          {"numbered_list_markers", numbered_list_markers},
          {"abbreviation_exceptions", abbreviation_exceptions},
          {"min_segment_chars", min_segment_chars}};
}

SegmenterConfig SegmenterConfig::from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("segmenter config: expected a JSON object");
  SegmenterConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "terminal_punctuation") {
      if (!value.is_string()) throw ValidationError("segmenter config: 'terminal_punctuation' must be a string");
      c.terminal_punctuation = utf8::decode(value.get<std::string>());
    } else if (key == "extra_delimiters") {
      c.extra_delimiters = string_list(value, "extra_delimiters");
    } else if (key == "line_start_markers") {
      c.line_start_markers = string_list(value, "line_start_markers");
    } else if (key == "numbered_list_markers") {
      if (!value.is_boolean()) throw ValidationError("segmenter config: 'numbered_list_markers' must be a boolean");
      c.numbered_list_markers = value.get<bool>();
    } else if (key == "abbreviation_exceptions") {
      c.abbreviation_exceptions = string_list(value, "abbreviation_exceptions");
    } else if (key == "min_segment_chars") {
      if (!value.is_number_integer() || value.get<long long>() < 1) {
        throw ValidationError("segmenter config: 'min_segment_chars' must be a positive integer");
      }
      c.min_segment_chars = value.get<std::size_t>();
    } else {
      throw ValidationError("segmenter config: unknown field '" + key + "'");
    }
  }
  c.validate();
  return c;
}

SegmenterConfig SegmenterConfig::load(const std::filesystem::path& path) {
  const auto text = io::read_file(path);
  try {
    return from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::string SegmenterConfig::fingerprint() const { return sha256_hex(to_json().dump()); }

std::vector<Sentence> segment(const Document& doc, const SegmenterConfig& config) {
  config.validate();
  const std::u32string t = utf8::decode(doc.text);
  const Segmenter segmenter(config);
  std::vector<Sentence> out;
  for (auto [a, b] : segmenter.split(t)) {
    while (a < b && (is_space(t[a]) || (is_bullet_glyph(t[a]) && a + 1 < b && is_space(t[a + 1])))) ++a;
    while (b > a && is_space(t[b - 1])) --b;
    if (b - a < config.min_segment_chars) continue;
    out.push_back({doc.doc_id, utf8::encode(std::u32string_view(t).substr(a, b - a)), a, b});
  }
  return out;
}

std::string AlignmentWarning::message() const {
  return "doc '" + doc_id + "': annotation '" + annotation.label + "' [" +
         std::to_string(annotation.start) + ", " + std::to_string(annotation.end) + ") spans " +
         std::to_string(sentences_touched) + " sentences";
}

std::vector<AlignmentWarning> check_annotation_alignment(const Document& doc,
                                                         const std::vector<Sentence>& sentences) {
  std::vector<AlignmentWarning> warnings;
  for (const auto& a : doc.annotations) {
    std::size_t touched = 0;
    for (const auto& s : sentences) {
      if (a.start < s.end && s.start < a.end) ++touched;
    }
    if (touched > 1) warnings.push_back({doc.doc_id, a, touched});
  }
  return warnings;
}

json sentence_to_json(const Sentence& s) {
  return {{"doc_id", s.doc_id}, {"start", s.start}, {"end", s.end}, {"text", s.text}};
}

Sentence sentence_from_json(const json& j) {
  if (!j.is_object() || !j.contains("doc_id") || !j.contains("start") || !j.contains("end") ||
      !j.contains("text")) {
    throw ValidationError("sentence record needs doc_id, start, end and text");
  }
  if (!j["doc_id"].is_string() || !j["text"].is_string() || !j["start"].is_number_unsigned() ||
      !j["end"].is_number_unsigned()) {
    throw ValidationError("sentence record has a field of the wrong type");
  }
  Sentence s{j["doc_id"].get<std::string>(), j["text"].get<std::string>(),
             j["start"].get<std::size_t>(), j["end"].get<std::size_t>()};
  if (s.start > s.end) throw ValidationError("sentence record with start > end");
  return s;
}

}  // namespace intentscan
