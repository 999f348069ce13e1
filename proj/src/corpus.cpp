#include "intentscan/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include "intentscan/errors.hpp"
#include "intentscan/io.hpp"
#include "intentscan/utf8.hpp"

namespace intentscan {

using nlohmann::json;

LabelRegistry::LabelRegistry(std::vector<Label> labels, std::size_t min_support)
    : labels_(std::move(labels)), min_support_(min_support) {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i].id.empty()) throw ValidationError("label registry: empty label id");
    if (!index_.emplace(labels_[i].id, i).second) {
      throw ValidationError("label registry: duplicate label id '" + labels_[i].id + "'");
    }
    if (labels_[i].name.empty()) labels_[i].name = labels_[i].id;
  }
}

std::optional<std::size_t> LabelRegistry::index_of(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> LabelRegistry::ids() const {
  std::vector<std::string> out;
  out.reserve(labels_.size());
  for (const auto& l : labels_) out.push_back(l.id);
  return out;
}

json LabelRegistry::to_json() const {
  json labels = json::array();
  for (const auto& l : labels_) labels.push_back({{"id", l.id}, {"name", l.name}});
  return {{"labels", labels}, {"min_support", min_support_}};
}

LabelRegistry LabelRegistry::from_json(const json& j) {
  if (!j.is_object() || !j.contains("labels") || !j["labels"].is_array()) {
    throw ValidationError("label registry: expected an object with a 'labels' array");
  }
  std::vector<Label> labels;
  for (const auto& item : j["labels"]) {
    if (!item.is_object() || !item.contains("id") || !item["id"].is_string()) {
      throw ValidationError("label registry: every label needs a string 'id'");
    }
    Label l{item["id"].get<std::string>(), {}};
    if (item.contains("name")) {
      if (!item["name"].is_string()) throw ValidationError("label registry: 'name' must be a string");
      l.name = item["name"].get<std::string>();
    }
    labels.push_back(std::move(l));
  }
  std::size_t min_support = kDefaultMinSupport;
  if (j.contains("min_support")) {
    const auto& ms = j["min_support"];
    if (!ms.is_number_integer() || ms.get<long long>() < 0) {
      throw ValidationError("label registry: 'min_support' must be a non-negative integer");
    }
    min_support = ms.get<std::size_t>();
  }
  return LabelRegistry(std::move(labels), min_support);
}

LabelRegistry LabelRegistry::load(const std::filesystem::path& path) {
  const auto text = io::read_file(path);
  try {
    return from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::size_t CorpusStats::count(const std::string& label) const {
  for (const auto& [id, n] : per_label_counts) {
    if (id == label) return n;
  }
  return 0;
}

json CorpusStats::to_json() const {
  json counts = json::object();
  json order = json::array();
  for (const auto& [id, n] : per_label_counts) {
    counts[id] = n;
    order.push_back(id);
  }
  return {{"n_documents", n_documents},
          {"n_annotations", n_annotations},
          {"per_label_counts", counts},
          {"label_order", order},
          {"mean_per_label", mean_per_label},
          {"std_per_label", std_per_label},
          {"std_kind", "population"}};
}

void validate_document(const Document& doc, const LabelRegistry* registry) {
  if (doc.doc_id.empty()) throw ValidationError("document with empty doc_id");
  const std::size_t len = utf8::length(doc.text);
  for (const auto& a : doc.annotations) {
    if (a.start >= a.end || a.end > len) {
      throw ValidationError("doc '" + doc.doc_id + "': span [" + std::to_string(a.start) + ", " +
                            std::to_string(a.end) + ") out of range for text of length " +
                            std::to_string(len));
    }
    if (a.label.empty()) throw ValidationError("doc '" + doc.doc_id + "': annotation with empty label");
    if (registry && !registry->contains(a.label)) {
      throw ValidationError("doc '" + doc.doc_id + "': unknown label '" + a.label + "'");
    }
  }
}

namespace {

[[noreturn]] void field_error(std::size_t line, const std::string& field, const std::string& what) {
  throw ValidationError("line " + std::to_string(line) + ": field '" + field + "': " + what);
}

std::size_t offset_field(const json& a, const char* name, std::size_t line) {
  if (!a.contains(name)) field_error(line, std::string("annotations.") + name, "missing");
  const auto& v = a[name];
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    field_error(line, std::string("annotations.") + name, "expected a non-negative integer");
  }
  return v.get<std::size_t>();
}

Document parse_record(const json& j, std::size_t line) {
  if (!j.is_object()) throw ValidationError("line " + std::to_string(line) + ": expected a JSON object");
  Document doc;
  if (!j.contains("doc_id") || !j["doc_id"].is_string()) field_error(line, "doc_id", "missing or not a string");
  doc.doc_id = j["doc_id"].get<std::string>();
  if (doc.doc_id.empty()) field_error(line, "doc_id", "empty");
  if (!j.contains("text") || !j["text"].is_string()) field_error(line, "text", "missing or not a string");
  doc.text = j["text"].get<std::string>();
  if (j.contains("annotations")) {
    const auto& anns = j["annotations"];
    if (!anns.is_array()) field_error(line, "annotations", "expected an array");
    for (const auto& a : anns) {
      if (!a.is_object()) field_error(line, "annotations", "expected objects");
      SpanAnnotation ann;
      ann.start = offset_field(a, "start", line);
      ann.end = offset_field(a, "end", line);
      if (!a.contains("label") || !a["label"].is_string()) {
        field_error(line, "annotations.label", "missing or not a string");
      }
      ann.label = a["label"].get<std::string>();
      if (a.contains("annotator") && !a["annotator"].is_null()) {
        if (!a["annotator"].is_string()) field_error(line, "annotations.annotator", "expected a string");
        ann.annotator = a["annotator"].get<std::string>();
      }
      doc.annotations.push_back(std::move(ann));
    }
  }
  return doc;
}

}  // namespace

CorpusLoadResult parse_corpus(std::istream& in, const LabelRegistry* registry, LoadOptions options) {
  CorpusLoadResult result;
  std::set<std::string> seen;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (raw.find_first_not_of(" \t") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(raw);
    } catch (const json::parse_error& e) {
      throw ValidationError("line " + std::to_string(line) + ": malformed JSON: " + e.what());
    }
    Document doc = parse_record(j, line);
    if (!seen.insert(doc.doc_id).second) {
      throw ValidationError("line " + std::to_string(line) + ": duplicate doc_id '" + doc.doc_id + "'");
    }
    if (registry && options.permissive_labels) {
      std::erase_if(doc.annotations, [&](const SpanAnnotation& a) {
        if (registry->contains(a.label)) return false;
        ++result.unknown_labels[a.label];
        return true;
      });
    }
    try {
      validate_document(doc, registry);
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(line) + ": " + e.what());
    }
    result.documents.push_back(std::move(doc));
  }
  return result;
}

CorpusLoadResult load_corpus(const std::filesystem::path& path, const LabelRegistry* registry,
                             LoadOptions options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open corpus file: " + path.string());
  try {
    return parse_corpus(in, registry, options);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

json document_to_json(const Document& doc) {
  json anns = json::array();
  for (const auto& a : doc.annotations) {
    json ja = {{"start", a.start}, {"end", a.end}, {"label", a.label}};
    if (a.annotator) ja["annotator"] = *a.annotator;
    anns.push_back(std::move(ja));
  }
  return {{"doc_id", doc.doc_id}, {"text", doc.text}, {"annotations", anns}};
}

std::string serialize_corpus(const std::vector<Document>& corpus) {
  std::string out;
  for (const auto& doc : corpus) {
    out += document_to_json(doc).dump();
    out += '\n';
  }
  return out;
}

void save_corpus(const std::filesystem::path& path, const std::vector<Document>& corpus) {
  io::write_file(path, serialize_corpus(corpus));
}

CorpusStats compute_stats(const std::vector<Document>& corpus, const LabelRegistry& registry) {
  CorpusStats stats;
  stats.n_documents = corpus.size();
  std::vector<std::size_t> counts(registry.size(), 0);
  for (const auto& doc : corpus) {
    for (const auto& a : doc.annotations) {
      if (auto idx = registry.index_of(a.label)) ++counts[*idx];
    }
  }
  for (std::size_t i = 0; i < registry.size(); ++i) {
    stats.per_label_counts.emplace_back(registry.at(i).id, counts[i]);
    stats.n_annotations += counts[i];
  }
  if (!registry.empty()) {
    const double n = static_cast<double>(registry.size());
    stats.mean_per_label = static_cast<double>(stats.n_annotations) / n;
    double ss = 0.0;
    for (auto c : counts) {
      const double d = static_cast<double>(c) - stats.mean_per_label;
      ss += d * d;
    }
    stats.std_per_label = std::sqrt(ss / n);
  }
  return stats;
}

LabelFilterResult filter_labels_by_support(const std::vector<Document>& corpus,
                                           const LabelRegistry& registry, std::size_t min_support) {
  const auto stats = compute_stats(corpus, registry);
  std::vector<Label> kept;
  std::vector<Label> dropped;
  for (std::size_t i = 0; i < registry.size(); ++i) {
    (stats.per_label_counts[i].second >= min_support ? kept : dropped).push_back(registry.at(i));
  }
  if (kept.empty()) {
    throw ValidationError("no label reaches min_support " + std::to_string(min_support) +
                          "; nothing left to train on");
  }
  return {LabelRegistry(std::move(kept), min_support), std::move(dropped)};
}

Document dedupe_annotations(const Document& doc) {
  Document out{doc.doc_id, doc.text, {}};
  std::set<std::tuple<std::size_t, std::size_t, std::string>> seen;
  for (const auto& a : doc.annotations) {
    if (seen.emplace(a.start, a.end, a.label).second) out.annotations.push_back(a);
  }
  std::stable_sort(out.annotations.begin(), out.annotations.end(),
                   [](const SpanAnnotation& x, const SpanAnnotation& y) {
                     return std::tie(x.start, x.end, x.label) < std::tie(y.start, y.end, y.label);
                   });
  return out;
}

}  // namespace intentscan
