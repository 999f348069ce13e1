#include "intentscan/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "intentscan/errors.hpp"
#include "intentscan/hash.hpp"
#include "intentscan/io.hpp"
#include "intentscan/rng.hpp"

namespace intentscan {

using nlohmann::json;

namespace {
constexpr std::uint64_t kSplitStream = 1;
constexpr std::uint64_t kFoldStream = 2;
}  // namespace

std::vector<std::string> Dataset::document_ids() const {
  std::set<std::string> ids;
  for (const auto& ex : examples) ids.insert(ex.doc_id());
  return {ids.begin(), ids.end()};
}

std::vector<std::size_t> Dataset::label_counts() const {
  std::vector<std::size_t> counts(registry.size(), 0);
  for (const auto& ex : examples) {
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += ex.labels[i];
  }
  return counts;
}

Dataset build_examples(const std::vector<Document>& corpus,
                       const std::vector<std::vector<Sentence>>& sentences_per_doc,
                       const LabelRegistry& kept, const SegmenterConfig& segmenter,
                       bool include_negatives) {
  if (kept.empty()) throw ValidationError("cannot build examples against an empty label registry");
  if (corpus.size() != sentences_per_doc.size()) {
    throw ValidationError("build_examples: corpus and segmentation sizes differ");
  }
  Dataset ds;
  ds.registry = kept;
  ds.provenance = {sha256_hex(serialize_corpus(corpus)), segmenter.fingerprint()};
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    const auto& doc = corpus[d];
    for (const auto& s : sentences_per_doc[d]) {
      if (s.doc_id != doc.doc_id) {
        throw ValidationError("build_examples: sentence of '" + s.doc_id + "' listed under '" +
                              doc.doc_id + "'");
      }
      LabelVector labels(kept.size(), 0);
      bool any = false;
      for (const auto& a : doc.annotations) {
        const auto idx = kept.index_of(a.label);
        if (!idx) continue;  // dropped or unknown label
        if (a.start < s.end && s.start < a.end) {
          labels[*idx] = 1;
          any = true;
        }
      }
      if (any || include_negatives) ds.examples.push_back({s, std::move(labels)});
    }
  }
  return ds;
}

std::string serialize_examples(const Dataset& dataset) {
  std::string out;
  for (const auto& ex : dataset.examples) {
    json labels = json::array();
    for (std::size_t i = 0; i < ex.labels.size(); ++i) {
      if (ex.labels[i]) labels.push_back(dataset.registry.at(i).id);
    }
    json j = sentence_to_json(ex.sentence);
    j["labels"] = std::move(labels);
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::filesystem::path dataset_meta_path(const std::filesystem::path& path) {
  auto p = path;
  p += ".meta.json";
  return p;
}

void save_dataset(const std::filesystem::path& path, const Dataset& dataset) {
  io::write_file(path, serialize_examples(dataset));
  json meta = {{"registry", dataset.registry.to_json()},
               {"provenance",
                {{"corpus_hash", dataset.provenance.corpus_hash},
                 {"segmenter_hash", dataset.provenance.segmenter_hash}}},
               {"n_examples", dataset.examples.size()},
               {"n_documents", dataset.document_ids().size()}};
  io::write_file(dataset_meta_path(path), meta.dump(2) + "\n");
}

Dataset load_dataset(const std::filesystem::path& path) {
  const auto meta_path = dataset_meta_path(path);
  Dataset ds;
  try {
    const json meta = json::parse(io::read_file(meta_path));
    ds.registry = LabelRegistry::from_json(meta.at("registry"));
    ds.provenance.corpus_hash = meta.at("provenance").at("corpus_hash").get<std::string>();
    ds.provenance.segmenter_hash = meta.at("provenance").at("segmenter_hash").get<std::string>();
  } catch (const json::exception& e) {
    throw ValidationError(meta_path.string() + ": " + e.what());
  }
  if (ds.provenance.corpus_hash.empty() || ds.provenance.segmenter_hash.empty()) {
    throw ValidationError(meta_path.string() + ": empty provenance");
  }
  std::istringstream in(io::read_file(path));
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(raw);
      SentenceExample ex{sentence_from_json(j), LabelVector(ds.registry.size(), 0)};
      for (const auto& l : j.at("labels")) {
        const auto idx = ds.registry.index_of(l.get<std::string>());
        if (!idx) throw ValidationError("unknown label '" + l.get<std::string>() + "'");
        ex.labels[*idx] = 1;
      }
      ds.examples.push_back(std::move(ex));
    } catch (const json::exception& e) {
      throw ValidationError(path.string() + ": line " + std::to_string(line) + ": " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError(path.string() + ": line " + std::to_string(line) + ": " + e.what());
    }
  }
  return ds;
}

std::string dataset_fingerprint(const Dataset& dataset) {
  return sha256_hex(dataset.registry.to_json().dump() + "\n" + serialize_examples(dataset));
}

void SplitSpec::validate() const {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ValidationError("test_fraction must lie strictly between 0 and 1");
  }
  if (k_folds < 2) throw ValidationError("k_folds must be at least 2");
}

std::size_t test_document_count(std::size_t n_docs, double test_fraction) {
  auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n_docs)));
  return std::clamp<std::size_t>(n_test, 1, n_docs - 1);
}

TrainTestSplit split_train_test(const Dataset& dataset, const SplitSpec& spec) {
  spec.validate();
  auto docs = dataset.document_ids();
  if (docs.size() < 2) throw ValidationError("a train/test split needs at least 2 documents");
  Rng rng(derive_seed(spec.seed, kSplitStream));
  rng.shuffle(std::span(docs));
  const std::size_t n_test = test_document_count(docs.size(), spec.test_fraction);
  std::set<std::string> test_set(docs.begin(), docs.begin() + static_cast<std::ptrdiff_t>(n_test));

  TrainTestSplit out;
  out.train = dataset.subset([&](const std::string& id) { return !test_set.count(id); });
  out.test = dataset.subset([&](const std::string& id) { return test_set.count(id) > 0; });
  out.test_docs.assign(test_set.begin(), test_set.end());
  out.train_docs = out.train.document_ids();
  return out;
}

std::vector<std::string> FoldAssignment::docs_in_fold(std::size_t fold) const {
  std::vector<std::string> out;
  for (const auto& [doc, f] : fold_of_doc) {
    if (f == fold) out.push_back(doc);
  }
  return out;
}

std::vector<std::size_t> FoldAssignment::fold_sizes() const {
  std::vector<std::size_t> sizes(k, 0);
  for (const auto& [doc, f] : fold_of_doc) ++sizes.at(f);
  return sizes;
}

json FoldAssignment::to_json() const {
  json folds = json::array();
  for (std::size_t f = 0; f < k; ++f) folds.push_back(docs_in_fold(f));
  return {{"k", k}, {"fold_of_doc", fold_of_doc}, {"folds", folds}};
}

FoldAssignment FoldAssignment::from_json(const json& j) {
  FoldAssignment fa;
  try {
    fa.k = j.at("k").get<std::size_t>();
    fa.fold_of_doc = j.at("fold_of_doc").get<std::map<std::string, std::size_t>>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("fold assignment: ") + e.what());
  }
  if (fa.k < 2) throw ValidationError("fold assignment: k must be at least 2");
  for (const auto& [doc, f] : fa.fold_of_doc) {
    if (f >= fa.k) throw ValidationError("fold assignment: doc '" + doc + "' has fold index out of range");
  }
  return fa;
}

FoldAssignment make_folds(const Dataset& train, const SplitSpec& spec) {
  spec.validate();
  auto docs = train.document_ids();
  if (spec.k_folds > docs.size()) {
    throw ValidationError("k_folds (" + std::to_string(spec.k_folds) + ") exceeds the number of documents (" +
                          std::to_string(docs.size()) + ")");
  }
  Rng rng(derive_seed(spec.seed, kFoldStream));
  rng.shuffle(std::span(docs));
  FoldAssignment fa;
  fa.k = spec.k_folds;
  for (std::size_t i = 0; i < docs.size(); ++i) fa.fold_of_doc[docs[i]] = i % spec.k_folds;
  return fa;
}

}  // namespace intentscan
