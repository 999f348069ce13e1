#include "intentscan/synth.hpp"

#include <algorithm>
#include <set>

#include "intentscan/errors.hpp"
#include "intentscan/io.hpp"
#include "intentscan/rng.hpp"
#include "intentscan/segmenter.hpp"
#include "intentscan/utf8.hpp"

namespace intentscan {

using nlohmann::json;

namespace {

// Literal text and slot names of a template, alternating: literal, slot, literal, ...
struct ParsedTemplate {
  std::vector<std::string> literals;
  std::vector<std::string> slots;
};

ParsedTemplate parse_template(const std::string& t) {
  ParsedTemplate p;
  std::string current;
  std::size_t i = 0;
  while (i < t.size()) {
    if (t[i] == '{') {
      const auto close = t.find('}', i);
      if (close == std::string::npos) throw ValidationError("template '" + t + "': unclosed '{'");
      p.literals.push_back(std::move(current));
      current.clear();
      p.slots.push_back(t.substr(i + 1, close - i - 1));
      if (p.slots.back().empty()) throw ValidationError("template '" + t + "': empty slot name");
      i = close + 1;
    } else if (t[i] == '}') {
      throw ValidationError("template '" + t + "': stray '}'");
    } else {
      current.push_back(t[i++]);
    }
  }
  p.literals.push_back(std::move(current));
  return p;
}

// Rejects text the default segmenter would split or that ends in a word the
// segmenter treats as an abbreviation once a period is appended.
void check_boundary_free(const std::string& text, const std::string& what) {
  const auto cps = utf8::decode(text);
  for (std::size_t i = 0; i < cps.size(); ++i) {
    const char32_t c = cps[i];
    if (c == U'\n' || c == U'\r' || c == 0x2022) throw ValidationError(what + " contains a line break or bullet");
    if (c == U'!' || c == U'?') throw ValidationError(what + " contains terminal punctuation");
    if (c == U'.') {
      const bool decimal = i > 0 && i + 1 < cps.size() && cps[i - 1] >= U'0' && cps[i - 1] <= U'9' &&
                           cps[i + 1] >= U'0' && cps[i + 1] <= U'9';
      if (!decimal) throw ValidationError(what + " contains a period outside a decimal number");
    }
  }
  static const std::set<std::string> kAbbrev = [] {
    std::set<std::string> s;
    for (const auto& a : SegmenterConfig{}.abbreviation_exceptions) s.insert(a);
    return s;
  }();
  const auto last_space = text.find_last_of(" \t");
  std::string last = text.substr(last_space == std::string::npos ? 0 : last_space + 1);
  std::transform(last.begin(), last.end(), last.begin(), [](unsigned char c) { return std::tolower(c); });
  if (!last.empty() && kAbbrev.count(last + ".")) {
    throw ValidationError(what + " ends with '" + last + "', an abbreviation when followed by a period");
  }
}

std::vector<std::string> strings(const json& j, const std::string& field) {
  if (!j.is_array()) throw ValidationError("templates: '" + field + "' must be an array of strings");
  std::vector<std::string> out;
  for (const auto& s : j) {
    if (!s.is_string()) throw ValidationError("templates: '" + field + "' must be an array of strings");
    out.push_back(s.get<std::string>());
  }
  return out;
}

std::string capitalize(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 32);
  return s;
}

// "Refer to ..." -> "refer to ..."; leaves acronyms ("MRI ...") alone.
std::string decapitalize(std::string s) {
  if (s.size() >= 2 && s[0] >= 'A' && s[0] <= 'Z' && s[1] >= 'a' && s[1] <= 'z') s[0] = static_cast<char>(s[0] + 32);
  return s;
}

CountRange parse_range(const json& j, const char* field) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_unsigned() || !j[1].is_number_unsigned()) {
    throw ValidationError(std::string("gen config: '") + field + "' must be [min, max]");
  }
  return {j[0].get<std::size_t>(), j[1].get<std::size_t>()};
}

class DocumentWriter {
 public:
  void append(const std::string& s) {
    text_ += s;
    length_ += utf8::length(s);
  }
  std::size_t offset() const { return length_; }
  const std::string& text() const { return text_; }

 private:
  std::string text_;
  std::size_t length_ = 0;
};

}  // namespace

const IntentTemplates* TemplateSet::find(const std::string& label) const {
  for (const auto& t : intents) {
    if (t.label == label) return &t;
  }
  return nullptr;
}

LabelRegistry TemplateSet::registry() const {
  std::vector<Label> labels;
  for (const auto& t : intents) labels.push_back({t.label, t.name});
  return LabelRegistry(std::move(labels));
}

void TemplateSet::validate() const {
  std::set<std::string> seen;
  const auto check_template = [&](const std::string& t, const std::string& where) {
    if (t.empty()) throw ValidationError(where + ": empty template");
    const auto parsed = parse_template(t);
    for (const auto& slot : parsed.slots) {
      auto it = fillers.find(slot);
      if (it == fillers.end() || it->second.empty()) {
        throw ValidationError(where + ": template '" + t + "' uses unknown slot '{" + slot + "}'");
      }
    }
    std::string literal;
    for (const auto& l : parsed.literals) literal += l + " ";
    check_boundary_free(literal, where + " template '" + t + "'");
    if (!parsed.literals.back().empty()) check_boundary_free(parsed.literals.back(), where + " template '" + t + "'");
  };
  for (const auto& intent : intents) {
    if (!seen.insert(intent.label).second) throw ValidationError("templates: duplicate label '" + intent.label + "'");
    if (intent.phrases.size() < 3) {
      throw ValidationError("templates: label '" + intent.label + "' needs at least 3 phrase templates");
    }
    for (const auto& p : intent.phrases) check_template(p, "label '" + intent.label + "'");
  }
  if (negatives.empty()) throw ValidationError("templates: no negative sentence templates");
  for (const auto& n : negatives) check_template(n, "negatives");
  for (const auto& n : confusable_negatives) check_template(n, "confusable_negatives");
  for (const auto& h : headers) {
    if (h.empty()) throw ValidationError("templates: empty header");
    check_boundary_free(h, "header '" + h + "'");
  }
  for (const auto& [slot, values] : fillers) {
    if (values.empty()) throw ValidationError("templates: slot '" + slot + "' has no fillers");
    for (const auto& v : values) {
      if (v.empty()) throw ValidationError("templates: slot '" + slot + "' has an empty filler");
      check_boundary_free(v, "filler '" + v + "'");
    }
  }
}

void TemplateSet::validate(const LabelRegistry& registry) const {
  validate();
  for (const auto& l : registry.labels()) {
    if (!find(l.id)) throw ValidationError("templates: no phrase templates for registry label '" + l.id + "'");
  }
}

TemplateSet TemplateSet::from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("templates: expected a JSON object");
  TemplateSet t;
  try {
    for (const auto& item : j.at("intents")) {
      IntentTemplates it;
      it.label = item.at("label").get<std::string>();
      it.name = item.value("name", it.label);
      it.phrases = strings(item.at("phrases"), "phrases");
      t.intents.push_back(std::move(it));
    }
    if (j.contains("fillers")) {
      for (const auto& [slot, values] : j["fillers"].items()) t.fillers[slot] = strings(values, "fillers." + slot);
    }
    t.negatives = strings(j.at("negatives"), "negatives");
    if (j.contains("confusable_negatives")) t.confusable_negatives = strings(j["confusable_negatives"], "confusable_negatives");
    if (j.contains("headers")) t.headers = strings(j["headers"], "headers");
  } catch (const json::exception& e) {
    throw ValidationError(std::string("templates: ") + e.what());
  }
  t.validate();
  return t;
}

TemplateSet TemplateSet::load(const std::filesystem::path& path) {
  const auto text = io::read_file(path);
  try {
    return from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void GenConfig::validate() const {
  if (n_documents == 0) throw ValidationError("gen config: n_documents must be positive");
  if (sentences_per_doc.min > sentences_per_doc.max) throw ValidationError("gen config: empty sentences_per_doc range");
  if (intents_per_doc.min > intents_per_doc.max) throw ValidationError("gen config: empty intents_per_doc range");
  if (sentences_per_doc.max == 0) throw ValidationError("gen config: sentences_per_doc max must be positive");
  if (intents_per_doc.max > sentences_per_doc.max) {
    throw ValidationError("gen config: intents_per_doc max exceeds sentences_per_doc max");
  }
  if (!(bullet_probability >= 0.0 && bullet_probability <= 1.0) ||
      !(multi_intent_probability >= 0.0 && multi_intent_probability <= 1.0)) {
    throw ValidationError("gen config: probabilities must lie in [0, 1]");
  }
  std::set<std::string> seen;
  for (const auto& [label, count] : label_targets) {
    if (!seen.insert(label).second) throw ValidationError("gen config: duplicate target for '" + label + "'");
  }
  if (doc_id_prefix.empty()) throw ValidationError("gen config: empty doc_id_prefix");
}

json GenConfig::to_json() const {
  json targets = json::array();
  for (const auto& [label, count] : label_targets) targets.push_back({label, count});
  return {{"n_documents", n_documents},
          {"sentences_per_doc", {sentences_per_doc.min, sentences_per_doc.max}},
          {"intents_per_doc", {intents_per_doc.min, intents_per_doc.max}},
          {"label_targets", targets},
          {"seed", seed},
          {"bullet_probability", bullet_probability},
          {"multi_intent_probability", multi_intent_probability},
          {"confusable", confusable},
          {"doc_id_prefix", doc_id_prefix}};
}

GenConfig GenConfig::from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("gen config: expected a JSON object");
  GenConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "n_documents") c.n_documents = value.get<std::size_t>();
      else if (key == "sentences_per_doc") c.sentences_per_doc = parse_range(value, "sentences_per_doc");
      else if (key == "intents_per_doc") c.intents_per_doc = parse_range(value, "intents_per_doc");
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "bullet_probability") c.bullet_probability = value.get<double>();
      else if (key == "multi_intent_probability") c.multi_intent_probability = value.get<double>();
      else if (key == "confusable") c.confusable = value.get<bool>();
      else if (key == "doc_id_prefix") c.doc_id_prefix = value.get<std::string>();
      else if (key == "label_targets") {
        if (value.is_object()) {
          for (const auto& [label, count] : value.items()) c.label_targets.emplace_back(label, count.get<std::size_t>());
        } else if (value.is_array()) {
          for (const auto& pair : value) {
            c.label_targets.emplace_back(pair.at(0).get<std::string>(), pair.at(1).get<std::size_t>());
          }
        } else {
          throw ValidationError("gen config: 'label_targets' must be an object or an array of [label, count]");
        }
      } else {
        throw ValidationError("gen config: unknown field '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("gen config: ") + e.what());
  }
  c.validate();
  return c;
}

GenConfig GenConfig::load(const std::filesystem::path& path) {
  const auto text = io::read_file(path);
  try {
    return from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

LabelRegistry generated_registry(const TemplateSet& templates, const GenConfig& config, std::size_t min_support) {
  std::set<std::string> targeted;
  for (const auto& [label, count] : config.label_targets) targeted.insert(label);
  std::vector<Label> labels;
  for (const auto& t : templates.intents) {
    if (targeted.count(t.label)) labels.push_back({t.label, t.name});
  }
  for (const auto& [label, count] : config.label_targets) {
    if (!templates.find(label)) throw ValidationError("gen config: no templates for label '" + label + "'");
  }
  return LabelRegistry(std::move(labels), min_support);
}

std::vector<Document> generate(const TemplateSet& templates, const GenConfig& config) {
  config.validate();
  templates.validate();
  const LabelRegistry registry = generated_registry(templates, config);

  std::size_t total = 0;
  for (const auto& [label, count] : config.label_targets) total += count;
  const std::size_t n = config.n_documents;
  if (total > n * config.intents_per_doc.max) {
    throw ValidationError("gen config: " + std::to_string(total) + " target annotations exceed the capacity of " +
                          std::to_string(n * config.intents_per_doc.max));
  }
  if (total < n * config.intents_per_doc.min) {
    throw ValidationError("gen config: " + std::to_string(total) + " target annotations cannot give every document " +
                          std::to_string(config.intents_per_doc.min) + " intents");
  }

  Rng rng(config.seed);

  std::vector<std::size_t> per_doc(n, config.intents_per_doc.min);
  std::vector<std::size_t> open;
  for (std::size_t i = 0; i < n && config.intents_per_doc.max > config.intents_per_doc.min; ++i) open.push_back(i);
  for (std::size_t r = total - n * config.intents_per_doc.min; r > 0; --r) {
    const std::size_t pick = rng.below(open.size());
    const std::size_t doc = open[pick];
    if (++per_doc[doc] == config.intents_per_doc.max) {
      open[pick] = open.back();
      open.pop_back();
    }
  }

  // Registry order first so the pool does not depend on label_targets order.
  std::vector<std::string> pool;
  pool.reserve(total);
  for (const auto& l : registry.labels()) {
    for (const auto& [label, count] : config.label_targets) {
      if (label == l.id) pool.insert(pool.end(), count, label);
    }
  }
  rng.shuffle(std::span(pool));

  const auto expand = [&](const std::string& tmpl) {
    const auto parsed = parse_template(tmpl);
    std::string out = parsed.literals[0];
    for (std::size_t s = 0; s < parsed.slots.size(); ++s) {
      out += rng.pick(templates.fillers.at(parsed.slots[s]));
      out += parsed.literals[s + 1];
    }
    return out;
  };
  static const std::vector<std::string> kBullets = {"•", "-", "*"};

  std::vector<Document> corpus;
  corpus.reserve(n);
  std::size_t cursor = 0;
  const std::size_t id_width = std::to_string(n).size();
  for (std::size_t d = 0; d < n; ++d) {
    std::vector<std::string> labels(pool.begin() + static_cast<std::ptrdiff_t>(cursor),
                                    pool.begin() + static_cast<std::ptrdiff_t>(cursor + per_doc[d]));
    cursor += per_doc[d];

    // Each item is one sentence: zero labels (negative), one, or two.
    std::vector<std::vector<std::string>> items;
    for (std::size_t j = 0; j < labels.size();) {
      if (j + 1 < labels.size() && labels[j] != labels[j + 1] && rng.bernoulli(config.multi_intent_probability)) {
        items.push_back({labels[j], labels[j + 1]});
        j += 2;
      } else {
        items.push_back({labels[j]});
        j += 1;
      }
    }
    const std::size_t lo = std::max(config.sentences_per_doc.min, items.size());
    const std::size_t hi = std::max(config.sentences_per_doc.max, items.size());
    const std::size_t n_sentences = rng.between(lo, hi);
    items.resize(n_sentences);
    rng.shuffle(std::span(items));

    std::vector<bool> bulleted(items.size());
    for (std::size_t k = 0; k < items.size(); ++k) bulleted[k] = rng.bernoulli(config.bullet_probability);
    const std::string& glyph = rng.pick(kBullets);

    Document doc;
    std::string id = std::to_string(d);
    doc.doc_id = config.doc_id_prefix + "-" + std::string(id_width - id.size(), '0') + id;
    DocumentWriter w;

    const auto render = [&](const std::vector<std::string>& item) {
      if (item.empty()) {
        const bool near_miss = config.confusable && !templates.confusable_negatives.empty() && rng.bernoulli(0.5);
        w.append(capitalize(expand(rng.pick(near_miss ? templates.confusable_negatives : templates.negatives))));
        return;
      }
      for (std::size_t p = 0; p < item.size(); ++p) {
        if (p > 0) w.append(" and ");
        std::string phrase = expand(rng.pick(templates.find(item[p])->phrases));
        phrase = p == 0 ? capitalize(phrase) : decapitalize(phrase);
        const std::size_t start = w.offset();
        w.append(phrase);
        doc.annotations.push_back({start, w.offset(), item[p], std::nullopt});
      }
    };

    bool first = true;
    for (std::size_t k = 0; k < items.size(); ++k) {
      if (bulleted[k]) continue;
      if (!first) w.append(" ");
      render(items[k]);
      w.append(".");
      first = false;
    }
    bool header_done = false;
    for (std::size_t k = 0; k < items.size(); ++k) {
      if (!bulleted[k]) continue;
      if (!header_done) {
        if (!first) w.append("\n\n");
        if (!templates.headers.empty()) w.append(rng.pick(templates.headers) + "\n");
        header_done = true;
      } else {
        w.append("\n");
      }
      w.append(glyph + " ");
      render(items[k]);
      if (rng.bernoulli(0.5)) w.append(".");
      first = false;
    }
    doc.text = w.text();
    corpus.push_back(std::move(doc));
  }
  return corpus;
}

}  // namespace intentscan
