#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "intentscan/corpus.hpp"

namespace intentscan {

// A trimmed segment of a document. start/end are scalar offsets into the
// parent text and text == slice(parent, start, end).
struct Sentence {
  std::string doc_id;
  std::string text;
  std::size_t start = 0;
  std::size_t end = 0;

  bool operator==(const Sentence&) const = default;
};

struct SegmenterConfig {
  // Characters that may end a sentence.
  std::u32string terminal_punctuation = U".!?";
  // Strings that always start a new segment wherever they occur. They are
  // never part of a segment.
  std::vector<std::string> extra_delimiters = {"\n", "•"};
  // Bullet markers that start a new segment only when they are the first
  // non-blank token on a line and are followed by whitespace.
  std::vector<std::string> line_start_markers = {"-", "*"};
  // "1." / "2)" list numbering at line start is treated as a bullet marker.
  bool numbered_list_markers = true;
  // Lowercase tokens, including their trailing period, that never end a
  // sentence.
  std::vector<std::string> abbreviation_exceptions = {
      "dr.",  "mr.",  "mrs.", "ms.",     "prof.", "e.g.",  "i.e.",   "vs.",
      "approx.", "b.d.", "o.d.", "t.d.s.", "q.d.s.", "p.r.n.", "o.n.", "no.",
      "pt.",  "hx.",  "ref.", "dept.",   "st.",   "cf.",   "c.f.",   "fig.",
      "mg.",  "ml.",  "wk.",  "wks.",    "yr.",   "yrs.",  "mth."};
  std::size_t min_segment_chars = 1;

  // Throws ValidationError on an empty delimiter set or non-lowercase
  // abbreviation entries.
  void validate() const;

  nlohmann::json to_json() const;
  static SegmenterConfig from_json(const nlohmann::json& j);
  static SegmenterConfig load(const std::filesystem::path& path);
  // SHA-256 over the canonical JSON form.
  std::string fingerprint() const;
};

std::vector<Sentence> segment(const Document& doc, const SegmenterConfig& config = {});

struct AlignmentWarning {
  std::string doc_id;
  SpanAnnotation annotation;
  std::size_t sentences_touched = 0;

  std::string message() const;
};

// One warning per annotation that overlaps more than one sentence.
std::vector<AlignmentWarning> check_annotation_alignment(const Document& doc,
                                                         const std::vector<Sentence>& sentences);

nlohmann::json sentence_to_json(const Sentence& s);
Sentence sentence_from_json(const nlohmann::json& j);

}  // namespace intentscan
