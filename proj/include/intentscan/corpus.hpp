#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace intentscan {

// A standoff intent annotation. Offsets are Unicode scalar indices into the
// owning document's text, end-exclusive.
struct SpanAnnotation {
  std::size_t start = 0;
  std::size_t end = 0;
  std::string label;
  std::optional<std::string> annotator;

  bool operator==(const SpanAnnotation&) const = default;
};

struct Document {
  std::string doc_id;
  std::string text;  // UTF-8
  std::vector<SpanAnnotation> annotations;

  bool operator==(const Document&) const = default;
};

struct Label {
  std::string id;
  std::string name;

  bool operator==(const Label&) const = default;
};

// Ordered set of intent labels. The position of a label in the registry is
// its index in every label vector built against it.
class LabelRegistry {
 public:
  static constexpr std::size_t kDefaultMinSupport = 50;

  LabelRegistry() = default;
  explicit LabelRegistry(std::vector<Label> labels,
                         std::size_t min_support = kDefaultMinSupport);

  const std::vector<Label>& labels() const { return labels_; }
  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }
  const Label& at(std::size_t i) const { return labels_.at(i); }
  std::optional<std::size_t> index_of(const std::string& id) const;
  bool contains(const std::string& id) const { return index_of(id).has_value(); }
  std::size_t min_support() const { return min_support_; }
  std::vector<std::string> ids() const;

  bool operator==(const LabelRegistry& other) const {
    return labels_ == other.labels_ && min_support_ == other.min_support_;
  }

  nlohmann::json to_json() const;
  static LabelRegistry from_json(const nlohmann::json& j);
  static LabelRegistry load(const std::filesystem::path& path);

 private:
  std::vector<Label> labels_;
  std::map<std::string, std::size_t> index_;
  std::size_t min_support_ = kDefaultMinSupport;
};

struct CorpusStats {
  std::size_t n_documents = 0;
  std::size_t n_annotations = 0;
  std::vector<std::pair<std::string, std::size_t>> per_label_counts;  // registry order
  double mean_per_label = 0.0;
  double std_per_label = 0.0;  // population standard deviation (divide by N)

  std::size_t count(const std::string& label) const;
  nlohmann::json to_json() const;
};

struct LoadOptions {
  // When set, annotations whose label is missing from the registry are
  // removed from the loaded documents and tallied in the result instead of
  // failing the load.
  bool permissive_labels = false;
};

struct CorpusLoadResult {
  std::vector<Document> documents;
  std::map<std::string, std::size_t> unknown_labels;
};

// JSON-lines corpus, one document per line. Without a registry, labels are
// not checked against a label set.
CorpusLoadResult parse_corpus(std::istream& in, const LabelRegistry* registry = nullptr,
                              LoadOptions options = {});
CorpusLoadResult load_corpus(const std::filesystem::path& path,
                             const LabelRegistry* registry = nullptr,
                             LoadOptions options = {});

nlohmann::json document_to_json(const Document& doc);
std::string serialize_corpus(const std::vector<Document>& corpus);
void save_corpus(const std::filesystem::path& path, const std::vector<Document>& corpus);

// Throws ValidationError if the document breaks a type invariant.
void validate_document(const Document& doc, const LabelRegistry* registry = nullptr);

CorpusStats compute_stats(const std::vector<Document>& corpus, const LabelRegistry& registry);

struct LabelFilterResult {
  LabelRegistry kept;
  std::vector<Label> dropped;
};

// Keeps labels with at least min_support annotations, preserving registry
// order. Documents are not modified.
LabelFilterResult filter_labels_by_support(const std::vector<Document>& corpus,
                                           const LabelRegistry& registry,
                                           std::size_t min_support);

// Collapses annotations identical in (start, end, label) and sorts the
// remainder by (start, end, label). The first annotator seen is kept.
Document dedupe_annotations(const Document& doc);

}  // namespace intentscan
