#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "intentscan/corpus.hpp"

namespace intentscan {

struct IntentTemplates {
  std::string label;
  std::string name;
  std::vector<std::string> phrases;  // "{slot}" placeholders draw from fillers
};

// Phrase templates for synthetic notes, loaded from JSON.
struct TemplateSet {
  std::vector<IntentTemplates> intents;
  std::map<std::string, std::vector<std::string>> fillers;
  std::vector<std::string> negatives;
  // Non-intent sentences sharing vocabulary with intent phrases; used only
  // in confusable mode.
  std::vector<std::string> confusable_negatives;
  std::vector<std::string> headers;

  const IntentTemplates* find(const std::string& label) const;
  LabelRegistry registry() const;

  // Every label needs >= 3 phrases, every slot a filler list, and no
  // template or filler may contain a sentence boundary (terminal
  // punctuation other than a decimal point, newlines, bullets).
  void validate() const;
  void validate(const LabelRegistry& registry) const;

  static TemplateSet from_json(const nlohmann::json& j);
  static TemplateSet load(const std::filesystem::path& path);
};

struct CountRange {
  std::size_t min = 0;
  std::size_t max = 0;
};

struct GenConfig {
  std::size_t n_documents = 100;
  CountRange sentences_per_doc{4, 10};
  CountRange intents_per_doc{1, 4};  // annotations per document
  // Exact annotation count per label; also fixes the emitted registry order.
  std::vector<std::pair<std::string, std::size_t>> label_targets;
  std::uint64_t seed = 0;
  double bullet_probability = 0.5;
  double multi_intent_probability = 0.1;
  bool confusable = false;
  std::string doc_id_prefix = "note";

  void validate() const;
  nlohmann::json to_json() const;
  static GenConfig from_json(const nlohmann::json& j);
  static GenConfig load(const std::filesystem::path& path);
};

// Registry of the config's target labels, display names from the templates.
LabelRegistry generated_registry(const TemplateSet& templates, const GenConfig& config,
                                 std::size_t min_support = LabelRegistry::kDefaultMinSupport);

// Throws ValidationError when the targets cannot be placed within the
// per-document ranges.
std::vector<Document> generate(const TemplateSet& templates, const GenConfig& config);

}  // namespace intentscan
