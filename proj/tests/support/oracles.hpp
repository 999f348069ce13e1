#pragma once
// Independent reference implementations and fixture generators shared by the
// unit tests and the acceptance runner. Nothing here calls the code under test
// to compute an expected value.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "intentscan/classifier.hpp"
#include "intentscan/corpus.hpp"
#include "intentscan/metrics.hpp"
#include "intentscan/reconciler.hpp"
#include "intentscan/rng.hpp"
#include "intentscan/segmenter.hpp"
#include "intentscan/synth.hpp"
#include "intentscan/utf8.hpp"

namespace oracle {

using intentscan::Rng;

// ---------------------------------------------------------------------------
// Segmenter grammar: texts assembled from pieces whose segmentation is known.

struct GrammarCase {
  std::string text;
  std::vector<std::string> expected;  // segment texts in order
};

inline std::string capitalized(std::string w) {
  if (!w.empty() && w[0] >= 'a' && w[0] <= 'z') w[0] = static_cast<char>(w[0] - 32);
  return w;
}

// One sentence body without terminal punctuation. Contains abbreviations,
// decimals, "e.g." continuations and non-ASCII words, none of which may split.
inline std::string grammar_body(Rng& rng) {
  static const std::vector<std::string> words = {
      "patient", "reviewed", "bloods", "stable", "weight", "clinic", "plan", "ogd", "café",
      "naïve", "oesophagéal", "reflux", "follow", "up", "discharge", "scan", "µg", "tolerating"};
  static const std::vector<std::string> inserts = {
      "Dr. Smith", "Mr. Jones", "approx. two", "e.g. bloods", "i.e. weekly", "BMI 37.5",
      "Hb 12.1 g/dl", "ref. ward", "Prof. Adams", "vs. baseline", "omeprazole 20mg b.d. daily",
      "v1.2 protocol", "0.5 mg dose"};
  std::string s = capitalized(rng.pick(words));
  const auto n = rng.between(1, 7);
  for (std::uint64_t i = 0; i < n; ++i) {
    s += " ";
    s += rng.bernoulli(0.25) ? rng.pick(inserts) : rng.pick(words);
  }
  return s;
}

inline GrammarCase grammar_text(Rng& rng) {
  static const std::vector<std::string> terminals = {".", "!", "?", "..", "?!"};
  static const std::vector<std::string> line_breaks = {
      "\n", "\n\n", "\n• ", "\n- ", "\n* ", "\n  - ", "\n1. ", "\n12) ", " • ", "\r\n"};
  GrammarCase c;
  if (rng.bernoulli(0.3)) c.text += rng.bernoulli(0.5) ? "  " : "\n";
  const auto n = rng.between(1, 6);
  for (std::uint64_t i = 0; i < n; ++i) {
    std::string seg = grammar_body(rng);
    const bool last = i + 1 == n;
    const int joiner = static_cast<int>(rng.below(3));
    if (last || joiner == 0) {
      // terminal punctuation then a space and a capitalised sentence
      if (rng.bernoulli(0.7)) seg += rng.pick(terminals);
      c.text += seg;
      c.expected.push_back(seg);
      if (!last) c.text += rng.bernoulli(0.8) ? " " : "   ";
      if (!last && !seg.empty() && seg.back() != '.' && seg.back() != '!' && seg.back() != '?') {
        // no punctuation means no boundary; force one with a newline instead
        c.text.back() = '\n';
      }
    } else {
      if (rng.bernoulli(0.3)) seg += ".";
      c.text += seg;
      c.expected.push_back(seg);
      c.text += rng.pick(line_breaks);
    }
  }
  if (rng.bernoulli(0.3)) c.text += "\n";
  return c;
}

// Unstructured text over an alphabet rich in boundary characters.
inline std::string noise_text(Rng& rng) {
  static const std::vector<std::string> alphabet = {
      "a", "B", "c", "é", "Ω", " ", " ", "\n", ".", "!", "?", "•", "-", "*", "1", "2",
      ")", "\"", "\t", "dr.", "e.g.", " x"};
  std::string s;
  const auto n = rng.below(60);
  for (std::uint64_t i = 0; i < n; ++i) s += rng.pick(alphabet);
  return s;
}

inline bool ws(char32_t c) {
  return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\v' || c == U'\f' || c == 0xA0;
}

// Structural invariants that must hold for any input; returns a description
// of the first violation.
inline std::optional<std::string> segment_violation(const intentscan::Document& doc,
                                                    const std::vector<intentscan::Sentence>& sents) {
  const std::u32string t = intentscan::utf8::decode(doc.text);
  std::vector<bool> covered(t.size(), false);
  std::size_t prev_end = 0;
  for (std::size_t i = 0; i < sents.size(); ++i) {
    const auto& s = sents[i];
    if (s.doc_id != doc.doc_id) return "doc id mismatch";
    if (!(s.start < s.end) || s.end > t.size()) return "bad range at segment " + std::to_string(i);
    if (i > 0 && s.start < prev_end) return "overlap or non-monotone at segment " + std::to_string(i);
    prev_end = s.end;
    const std::u32string piece = t.substr(s.start, s.end - s.start);
    if (intentscan::utf8::encode(piece) != s.text) return "text differs from slice at segment " + std::to_string(i);
    if (ws(piece.front()) || ws(piece.back())) return "untrimmed segment " + std::to_string(i);
    for (std::size_t k = s.start; k < s.end; ++k) covered[k] = true;
  }
  // Uncovered characters may only be whitespace, delimiter glyphs or list markers.
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (covered[k] || ws(t[k])) continue;
    const char32_t c = t[k];
    const bool marker = c == U'•' || c == U'-' || c == U'*' || c == U'.' || c == U')' || (c >= U'0' && c <= U'9');
    if (!marker) return "uncovered character at offset " + std::to_string(k);
  }
  // Reconstruction from segments plus gaps.
  std::u32string rebuilt;
  std::size_t cursor = 0;
  for (const auto& s : sents) {
    rebuilt += t.substr(cursor, s.start - cursor);
    rebuilt += intentscan::utf8::decode(s.text);
    cursor = s.end;
  }
  rebuilt += t.substr(cursor);
  if (rebuilt != t) return "reconstruction differs";
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Metrics

using Vectors = std::vector<intentscan::LabelVector>;

inline Vectors random_vectors(Rng& rng, std::size_t n, std::size_t labels, double p) {
  Vectors out(n, intentscan::LabelVector(labels, 0));
  for (auto& v : out)
    for (auto& b : v) b = rng.bernoulli(p) ? 1 : 0;
  return out;
}

struct BruteCounts {
  long tp = 0, fp = 0, fn = 0, tn = 0;
};

inline BruteCounts brute_count(const Vectors& pred, const Vectors& gold, std::size_t label) {
  BruteCounts c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i][label] != 0;
    const bool g = gold[i][label] != 0;
    if (p && g) c.tp++;
    if (p && !g) c.fp++;
    if (!p && g) c.fn++;
    if (!p && !g) c.tn++;
  }
  return c;
}

inline std::tuple<double, double, double> brute_prf(const BruteCounts& c) {
  const double p = c.tp + c.fp == 0 ? 0.0 : double(c.tp) / double(c.tp + c.fp);
  const double r = c.tp + c.fn == 0 ? 0.0 : double(c.tp) / double(c.tp + c.fn);
  const double f = p + r == 0 ? 0.0 : 2.0 * p * r / (p + r);
  return {p, r, f};
}

inline intentscan::LabelRegistry numbered_registry(std::size_t n) {
  std::vector<intentscan::Label> labels;
  for (std::size_t i = 0; i < n; ++i) labels.push_back({"L" + std::to_string(i), "Label " + std::to_string(i)});
  return intentscan::LabelRegistry(labels);
}

// Largest absolute deviation between the library's metrics and the oracle on
// one random fixture; a negative value signals a count mismatch.
inline double metrics_fixture_error(Rng& rng) {
  const std::size_t n = rng.between(1, 50);
  const std::size_t labels = rng.between(1, 11);
  const double density = rng.uniform();
  const auto gold = random_vectors(rng, n, labels, density);
  const auto pred = random_vectors(rng, n, labels, rng.uniform());
  const auto registry = numbered_registry(labels);
  const auto counts = intentscan::count_confusions(pred, gold, registry);
  double worst = 0.0;
  for (std::size_t l = 0; l < labels; ++l) {
    const auto b = brute_count(pred, gold, l);
    const auto& c = counts.per_label[l];
    if (long(c.tp) != b.tp || long(c.fp) != b.fp || long(c.fn) != b.fn || long(c.tn) != b.tn) return -1.0;
    const auto m = intentscan::precision_recall_f1(c);
    const auto [p, r, f] = brute_prf(b);
    worst = std::max({worst, std::abs(m.precision - p), std::abs(m.recall - r), std::abs(m.f1 - f)});
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Finite-difference gradient check

inline intentscan::LinearMultilabelModel random_model(Rng& rng, std::size_t labels, std::vector<std::string>& texts) {
  static const std::vector<std::string> words = {"book", "ogd", "repeat", "bloods", "discharge", "refer",
                                                 "dietician", "mdt", "scan", "clinic", "review", "weight"};
  texts.clear();
  const auto n_texts = rng.between(3, 8);
  for (std::uint64_t i = 0; i < n_texts; ++i) {
    std::string s;
    const auto len = rng.between(1, 5);
    for (std::uint64_t k = 0; k < len; ++k) s += (k ? " " : "") + rng.pick(words);
    texts.push_back(s);
  }
  auto vocab = intentscan::Vocabulary::build(texts, 1, 2);
  auto model = intentscan::LinearMultilabelModel::zeros(numbered_registry(labels), std::move(vocab));
  for (auto& w : model.weights)
    for (auto& x : w) x = (rng.uniform() * 2 - 1) * 2.0;
  for (auto& b : model.biases) b = (rng.uniform() * 2 - 1) * 2.0;
  return model;
}

// Max relative error between analytic and central-difference gradients.
inline double gradient_check(Rng& rng, double h = 1e-5) {
  const std::size_t labels = rng.between(1, 4);
  std::vector<std::string> texts;
  auto model = random_model(rng, labels, texts);
  const double l2 = rng.bernoulli(0.2) ? 0.0 : rng.uniform() * 0.1;

  std::vector<intentscan::TrainingExample> batch;
  const auto n = rng.between(1, 6);
  for (std::uint64_t i = 0; i < n; ++i) {
    intentscan::TrainingExample ex{model.features(rng.pick(texts)), intentscan::LabelVector(labels)};
    for (auto& y : ex.labels) y = rng.bernoulli(0.4) ? 1 : 0;
    batch.push_back(std::move(ex));
  }
  const auto analytic = intentscan::loss_and_gradient(model, batch, l2);

  const auto loss_at = [&](double& param, double value) {
    const double saved = param;
    param = value;
    const double loss = intentscan::loss_and_gradient(model, batch, l2).loss;
    param = saved;
    return loss;
  };
  const auto rel = [](double a, double b) {
    const double scale = std::max({std::abs(a), std::abs(b), 1e-6});
    return std::abs(a - b) / scale;
  };

  double worst = 0.0;
  for (std::size_t l = 0; l < labels; ++l) {
    for (std::size_t j = 0; j < model.weights[l].size(); ++j) {
      double& w = model.weights[l][j];
      const double x = w;
      const double numeric = (loss_at(w, x + h) - loss_at(w, x - h)) / (2 * h);
      worst = std::max(worst, rel(analytic.weight_grad[l][j], numeric));
    }
    double& b = model.biases[l];
    const double x = b;
    const double numeric = (loss_at(b, x + h) - loss_at(b, x - h)) / (2 * h);
    worst = std::max(worst, rel(analytic.bias_grad[l], numeric));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Reconciler

struct ReconcileFixture {
  std::vector<intentscan::Detection> detections;
  std::vector<intentscan::OrderRecord> orders;
  intentscan::IntentOrderMap map;
};

inline const std::vector<std::string>& fixture_intents() {
  static const std::vector<std::string> v = {"request_imaging", "discharge", "request_bloods", "refer_to_mdt",
                                             "book_outpatient_appointment", "unmapped_intent"};
  return v;
}
inline const std::vector<std::string>& fixture_order_types() {
  static const std::vector<std::string> v = {"IMAGING_US", "IMAGING_CT", "DISCHARGE", "LAB_PANEL", "MDT_LISTING",
                                             "OUTPATIENT_APPOINTMENT", "PHARMACY"};
  return v;
}

inline intentscan::OrderRecord random_order(Rng& rng, std::size_t n_docs) {
  return {"doc" + std::to_string(rng.below(n_docs)), rng.pick(fixture_order_types()),
          "2021-0" + std::to_string(rng.between(1, 9)) + "-1" + std::to_string(rng.below(10)) + "T09:30:00Z"};
}

inline ReconcileFixture random_reconcile_fixture(Rng& rng) {
  ReconcileFixture f;
  std::map<std::string, std::set<std::string>> mapping;
  const auto& intents = fixture_intents();
  for (std::size_t i = 0; i + 1 < intents.size(); ++i) {
    std::set<std::string> types;
    const auto k = rng.between(1, 2);
    for (std::uint64_t t = 0; t < k; ++t) types.insert(rng.pick(fixture_order_types()));
    mapping[intents[i]] = types;
  }
  f.map = intentscan::IntentOrderMap(mapping);
  const std::size_t n_docs = rng.between(1, 10);
  std::set<std::pair<std::string, std::string>> seen;
  for (std::size_t d = 0; d < n_docs; ++d) {
    const std::string doc = "doc" + std::to_string(d);
    const auto k = rng.below(4);
    for (std::uint64_t i = 0; i < k; ++i) {
      const auto& label = rng.pick(intents);
      if (!seen.insert({doc, label}).second) continue;
      const std::size_t start = rng.below(200);
      f.detections.push_back({doc, label, {doc, "evidence for " + label, start, start + 10}});
    }
  }
  const auto n_orders = rng.below(21);
  for (std::uint64_t i = 0; i < n_orders; ++i) f.orders.push_back(random_order(rng, n_docs));
  return f;
}

// Nested loops over every (detection, order) pair.
inline intentscan::GapReport brute_reconcile(const ReconcileFixture& f) {
  intentscan::GapReport r;
  std::vector<std::string> unmappable;
  for (const auto& d : f.detections) {
    intentscan::GapFinding g{d.doc_id, d.label, d.evidence, intentscan::FindingStatus::missing_order};
    bool mapped = false;
    for (const auto& [intent, types] : f.map.entries()) {
      if (intent != d.label) continue;
      mapped = true;
      for (const auto& o : f.orders) {
        if (o.doc_id == d.doc_id && types.count(o.order_type)) g.status = intentscan::FindingStatus::satisfied;
      }
    }
    if (!mapped && std::find(unmappable.begin(), unmappable.end(), d.label) == unmappable.end()) {
      unmappable.push_back(d.label);
    }
    r.findings.push_back(g);
  }
  for (const auto& g : r.findings) {
    if (g.status == intentscan::FindingStatus::satisfied) r.summary[g.label].satisfied++;
    else r.summary[g.label].missing_order++;
  }
  std::sort(unmappable.begin(), unmappable.end());
  r.unmappable_labels = unmappable;
  return r;
}

// ---------------------------------------------------------------------------
// Synthetic corpus: recover gold labels from span text by template matching.

inline std::string regex_escape(const std::string& s) {
  static const std::string special = R"(\^$.|?*+()[]{})";
  std::string out;
  for (char c : s) {
    if (special.find(c) != std::string::npos) out += '\\';
    out += c;
  }
  return out;
}

// One anchored, case-insensitive regex per label; slots become alternations
// of their filler lexicon.
inline std::map<std::string, std::regex> template_regexes(const intentscan::TemplateSet& ts) {
  std::map<std::string, std::regex> out;
  for (const auto& intent : ts.intents) {
    std::string alternatives;
    for (const auto& phrase : intent.phrases) {
      std::string pattern;
      std::size_t i = 0;
      while (i < phrase.size()) {
        if (phrase[i] == '{') {
          const auto close = phrase.find('}', i);
          const auto slot = phrase.substr(i + 1, close - i - 1);
          std::string alt;
          for (const auto& filler : ts.fillers.at(slot)) alt += (alt.empty() ? "" : "|") + regex_escape(filler);
          pattern += "(?:" + alt + ")";
          i = close + 1;
        } else {
          pattern += regex_escape(std::string(1, phrase[i]));
          ++i;
        }
      }
      alternatives += (alternatives.empty() ? "" : "|") + std::string("(?:") + pattern + ")";
    }
    out.emplace(intent.label, std::regex("^(?:" + alternatives + ")$", std::regex::icase | std::regex::ECMAScript));
  }
  return out;
}

// Labels whose template matches the text exactly.
inline std::vector<std::string> template_matches(const std::map<std::string, std::regex>& regexes,
                                                 const std::string& text) {
  std::vector<std::string> hits;
  for (const auto& [label, re] : regexes)
    if (std::regex_match(text, re)) hits.push_back(label);
  return hits;
}

}  // namespace oracle
