#include "intentscan/reconciler.hpp"

#include <algorithm>
#include <fstream>
#include <regex>
#include <sstream>
#include <tuple>

#include "intentscan/errors.hpp"
#include "intentscan/io.hpp"

namespace intentscan {

using nlohmann::json;

bool is_iso8601(std::string_view timestamp) {
  static const std::regex kPattern(
      R"(^(\d{4})-(\d{2})-(\d{2})(?:[T ](\d{2}):(\d{2})(?::(\d{2})(?:\.\d+)?)?(Z|[+-](\d{2}):?(\d{2}))?)?$)");
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_match(timestamp.begin(), timestamp.end(), m, kPattern)) return false;
  const auto num = [&](int g) { return m[g].matched ? std::stoi(m[g].str()) : 0; };
  const int year = num(1), month = num(2), day = num(3);
  if (month < 1 || month > 12 || day < 1) return false;
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  const bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
  const int max_day = kDays[month - 1] + (month == 2 && leap ? 1 : 0);
  if (day > max_day) return false;
  if (num(4) > 23 || num(5) > 59 || num(6) > 60) return false;
  if (num(8) > 23 || num(9) > 59) return false;
  return true;
}

std::vector<OrderRecord> parse_orders(std::istream& in) {
  std::vector<OrderRecord> out;
  std::string raw;
  std::size_t line = 0;
  const auto fail = [&](const std::string& what) -> ValidationError {
    return ValidationError("orders line " + std::to_string(line) + ": " + what);
  };
  while (std::getline(in, raw)) {
    ++line;
    if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(raw);
    } catch (const json::parse_error& e) {
      throw fail(std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) throw fail("expected a JSON object");
    for (const char* key : {"doc_id", "order_type", "timestamp"}) {
      if (!j.contains(key) || !j[key].is_string()) throw fail(std::string("field '") + key + "' missing or not a string");
    }
    OrderRecord r{j["doc_id"].get<std::string>(), j["order_type"].get<std::string>(),
                  j["timestamp"].get<std::string>()};
    if (r.doc_id.empty()) throw fail("empty doc_id");
    if (r.order_type.empty()) throw fail("empty order_type");
    if (!is_iso8601(r.timestamp)) throw fail("timestamp '" + r.timestamp + "' is not ISO-8601");
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<OrderRecord> load_orders(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open orders file: " + path.string());
  try {
    return parse_orders(in);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

IntentOrderMap::IntentOrderMap(std::map<std::string, std::set<std::string>> mapping)
    : mapping_(std::move(mapping)) {
  for (const auto& [intent, types] : mapping_) {
    if (intent.empty()) throw ValidationError("intent-order map: empty intent label");
    if (types.empty()) throw ValidationError("intent-order map: intent '" + intent + "' has no order types");
    for (const auto& t : types) {
      if (t.empty()) throw ValidationError("intent-order map: intent '" + intent + "' has an empty order type");
    }
  }
}

const std::set<std::string>* IntentOrderMap::find(const std::string& intent) const {
  auto it = mapping_.find(intent);
  return it == mapping_.end() ? nullptr : &it->second;
}

void IntentOrderMap::validate(const LabelRegistry& registry) const {
  for (const auto& [intent, types] : mapping_) {
    if (!registry.contains(intent)) {
      throw ValidationError("intent-order map: intent '" + intent + "' is not in the label registry");
    }
  }
}

json IntentOrderMap::to_json() const {
  json j = json::object();
  for (const auto& [intent, types] : mapping_) j[intent] = std::vector<std::string>(types.begin(), types.end());
  return j;
}

IntentOrderMap IntentOrderMap::from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("intent-order map: expected a JSON object");
  std::map<std::string, std::set<std::string>> mapping;
  for (const auto& [intent, types] : j.items()) {
    if (!types.is_array()) throw ValidationError("intent-order map: '" + intent + "' must map to an array");
    auto& set = mapping[intent];
    for (const auto& t : types) {
      if (!t.is_string()) throw ValidationError("intent-order map: order types must be strings");
      set.insert(t.get<std::string>());
    }
  }
  return IntentOrderMap(std::move(mapping));
}

IntentOrderMap IntentOrderMap::load(const std::filesystem::path& path) {
  const auto text = io::read_file(path);
  try {
    return from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::string_view to_string(FindingStatus status) {
  return status == FindingStatus::satisfied ? "satisfied" : "missing-order";
}

GapReport reconcile(std::span<const Detection> detections, std::span<const OrderRecord> orders,
                    const IntentOrderMap& map) {
  std::map<std::string, std::set<std::string>> ordered_types;
  for (const auto& o : orders) ordered_types[o.doc_id].insert(o.order_type);

  GapReport report;
  std::set<std::string> unmappable;
  for (const auto& d : detections) {
    GapFinding f{d.doc_id, d.label, d.evidence, FindingStatus::missing_order};
    const auto* satisfying = map.find(d.label);
    if (!satisfying) {
      unmappable.insert(d.label);
    } else if (auto it = ordered_types.find(d.doc_id); it != ordered_types.end()) {
      const bool hit = std::any_of(satisfying->begin(), satisfying->end(),
                                   [&](const std::string& t) { return it->second.count(t) > 0; });
      if (hit) f.status = FindingStatus::satisfied;
    }
    auto& s = report.summary[f.label];
    (f.status == FindingStatus::satisfied ? s.satisfied : s.missing_order) += 1;
    report.findings.push_back(std::move(f));
  }
  report.unmappable_labels.assign(unmappable.begin(), unmappable.end());
  return report;
}

json GapReport::to_json() const {
  json fs = json::array();
  for (const auto& f : findings) {
    fs.push_back({{"doc_id", f.doc_id},
                  {"intent", f.label},
                  {"status", to_string(f.status)},
                  {"evidence", {{"start", f.evidence.start}, {"end", f.evidence.end}, {"text", f.evidence.text}}}});
  }
  json summary_json = json::object();
  for (const auto& [label, s] : summary) {
    summary_json[label] = {{"satisfied", s.satisfied}, {"missing_order", s.missing_order}};
  }
  return {{"findings", fs}, {"summary", summary_json}, {"unmappable_labels", unmappable_labels},
          {"n_findings", findings.size()}};
}

std::string GapReport::to_tsv() const {
  std::string out = "doc_id\tintent\tstatus\tstart\tend\tevidence\n";
  for (const auto& f : findings) {
    std::string text = f.evidence.text;
    std::replace_if(text.begin(), text.end(), [](char c) { return c == '\t' || c == '\n' || c == '\r'; }, ' ');
    out += f.doc_id + "\t" + f.label + "\t" + std::string(to_string(f.status)) + "\t" +
           std::to_string(f.evidence.start) + "\t" + std::to_string(f.evidence.end) + "\t" + text + "\n";
  }
  return out;
}

std::vector<Detection> collapse_detections(std::span<const SentencePrediction> predictions) {
  std::map<std::pair<std::string, std::string>, Sentence> earliest;
  for (const auto& p : predictions) {
    for (const auto& label : p.labels) {
      auto key = std::make_pair(p.sentence.doc_id, label);
      auto it = earliest.find(key);
      if (it == earliest.end() || p.sentence.start < it->second.start) earliest[key] = p.sentence;
    }
  }
  std::vector<Detection> out;
  out.reserve(earliest.size());
  for (auto& [key, sentence] : earliest) out.push_back({key.first, key.second, sentence});
  std::sort(out.begin(), out.end(), [](const Detection& a, const Detection& b) {
    return std::tie(a.doc_id, a.evidence.start, a.label) < std::tie(b.doc_id, b.evidence.start, b.label);
  });
  return out;
}

json prediction_to_json(const SentencePrediction& p) {
  json j = sentence_to_json(p.sentence);
  j["labels"] = p.labels;
  j["probabilities"] = p.probabilities;
  return j;
}

std::vector<SentencePrediction> parse_predictions(std::istream& in) {
  std::vector<SentencePrediction> out;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(raw);
      SentencePrediction p;
      p.sentence = sentence_from_json(j);
      p.labels = j.at("labels").get<std::vector<std::string>>();
      if (j.contains("probabilities")) p.probabilities = j["probabilities"].get<std::map<std::string, double>>();
      out.push_back(std::move(p));
    } catch (const json::exception& e) {
      throw ValidationError("detections line " + std::to_string(line) + ": " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError("detections line " + std::to_string(line) + ": " + e.what());
    }
  }
  return out;
}

std::vector<SentencePrediction> load_predictions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open detections file: " + path.string());
  try {
    return parse_predictions(in);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

}  // namespace intentscan
