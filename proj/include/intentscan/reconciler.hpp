#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "intentscan/corpus.hpp"
#include "intentscan/segmenter.hpp"

namespace intentscan {

struct OrderRecord {
  std::string doc_id;
  std::string order_type;
  std::string timestamp;  // ISO-8601

  bool operator==(const OrderRecord&) const = default;
};

// Accepts YYYY-MM-DD with an optional THH:MM[:SS[.fraction]] time and
// optional Z or +HH:MM offset; calendar ranges are checked.
bool is_iso8601(std::string_view timestamp);

std::vector<OrderRecord> parse_orders(std::istream& in);
std::vector<OrderRecord> load_orders(const std::filesystem::path& path);

// Intent label -> order types that satisfy it.
class IntentOrderMap {
 public:
  IntentOrderMap() = default;
  explicit IntentOrderMap(std::map<std::string, std::set<std::string>> mapping);

  const std::set<std::string>* find(const std::string& intent) const;
  const std::map<std::string, std::set<std::string>>& entries() const { return mapping_; }
  // Throws ValidationError when a mapped intent is missing from the registry.
  void validate(const LabelRegistry& registry) const;

  nlohmann::json to_json() const;
  static IntentOrderMap from_json(const nlohmann::json& j);
  static IntentOrderMap load(const std::filesystem::path& path);

 private:
  std::map<std::string, std::set<std::string>> mapping_;
};

// One detected (document, intent) pair with the sentence that triggered it.
struct Detection {
  std::string doc_id;
  std::string label;
  Sentence evidence;

  bool operator==(const Detection&) const = default;
};

enum class FindingStatus { missing_order, satisfied };
std::string_view to_string(FindingStatus status);

struct GapFinding {
  std::string doc_id;
  std::string label;
  Sentence evidence;
  FindingStatus status = FindingStatus::missing_order;

  bool operator==(const GapFinding&) const = default;
};

struct IntentSummary {
  std::size_t satisfied = 0;
  std::size_t missing_order = 0;

  bool operator==(const IntentSummary&) const = default;
};

struct GapReport {
  std::vector<GapFinding> findings;  // detection order
  std::map<std::string, IntentSummary> summary;
  // Detected labels absent from the map. Their findings are missing-order.
  std::vector<std::string> unmappable_labels;

  bool operator==(const GapReport&) const = default;
  nlohmann::json to_json() const;
  std::string to_tsv() const;
};

GapReport reconcile(std::span<const Detection> detections, std::span<const OrderRecord> orders,
                    const IntentOrderMap& map);

// Sentence-level predictions collapsed to one detection per (doc, label),
// keeping the earliest evidence sentence. Output sorted by (doc_id, start, label).
struct SentencePrediction {
  Sentence sentence;
  std::vector<std::string> labels;
  std::map<std::string, double> probabilities;

  bool operator==(const SentencePrediction&) const = default;
};
std::vector<Detection> collapse_detections(std::span<const SentencePrediction> predictions);

nlohmann::json prediction_to_json(const SentencePrediction& p);
std::vector<SentencePrediction> parse_predictions(std::istream& in);
std::vector<SentencePrediction> load_predictions(const std::filesystem::path& path);

}  // namespace intentscan
