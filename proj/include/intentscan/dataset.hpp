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
#include "intentscan/segmenter.hpp"

namespace intentscan {

// Binary multilabel target, indexed by registry position.
using LabelVector = std::vector<std::uint8_t>;

struct SentenceExample {
  Sentence sentence;
  LabelVector labels;

  const std::string& doc_id() const { return sentence.doc_id; }
  bool operator==(const SentenceExample&) const = default;
};

struct Provenance {
  std::string corpus_hash;
  std::string segmenter_hash;

  bool operator==(const Provenance&) const = default;
};

struct Dataset {
  std::vector<SentenceExample> examples;
  LabelRegistry registry;
  Provenance provenance;

  // Distinct document ids, sorted.
  std::vector<std::string> document_ids() const;
  // Examples whose document satisfies keep(doc_id), same registry and provenance.
  template <typename Pred>
  Dataset subset(Pred keep) const {
    Dataset out{{}, registry, provenance};
    for (const auto& ex : examples) {
      if (keep(ex.doc_id())) out.examples.push_back(ex);
    }
    return out;
  }
  // Number of examples carrying each label, registry order.
  std::vector<std::size_t> label_counts() const;

  bool operator==(const Dataset&) const = default;
};

// Projects annotations with kept labels onto sentences: a label is set on a
// sentence when the annotation shares at least one character with it.
// sentences_per_doc[i] must be the segmentation of corpus[i].
Dataset build_examples(const std::vector<Document>& corpus,
                       const std::vector<std::vector<Sentence>>& sentences_per_doc,
                       const LabelRegistry& kept, const SegmenterConfig& segmenter,
                       bool include_negatives = true);

// Dataset file: JSON-lines of {doc_id, start, end, text, labels}, plus a
// "<path>.meta.json" sidecar carrying the registry and provenance.
std::string serialize_examples(const Dataset& dataset);
void save_dataset(const std::filesystem::path& path, const Dataset& dataset);
Dataset load_dataset(const std::filesystem::path& path);
std::filesystem::path dataset_meta_path(const std::filesystem::path& path);
// SHA-256 over the JSON-lines payload and registry.
std::string dataset_fingerprint(const Dataset& dataset);

struct SplitSpec {
  double test_fraction = 0.20;
  std::size_t k_folds = 5;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainTestSplit {
  Dataset train;
  Dataset test;
  std::vector<std::string> train_docs;
  std::vector<std::string> test_docs;
};

// Document-level split; round(test_fraction * n_docs) documents, clamped to
// [1, n_docs - 1], go to the test side.
TrainTestSplit split_train_test(const Dataset& dataset, const SplitSpec& spec);
std::size_t test_document_count(std::size_t n_docs, double test_fraction);

struct FoldAssignment {
  std::size_t k = 0;
  std::map<std::string, std::size_t> fold_of_doc;

  std::vector<std::string> docs_in_fold(std::size_t fold) const;
  std::vector<std::size_t> fold_sizes() const;

  nlohmann::json to_json() const;
  static FoldAssignment from_json(const nlohmann::json& j);

  bool operator==(const FoldAssignment&) const = default;
};

// Seeded document shuffle dealt round-robin into k folds.
FoldAssignment make_folds(const Dataset& train, const SplitSpec& spec);

}  // namespace intentscan
