#pragma once

#include <filesystem>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "intentscan/corpus.hpp"
#include "intentscan/dataset.hpp"
#include "intentscan/segmenter.hpp"

namespace fixtures {

inline intentscan::LabelRegistry registry(std::initializer_list<const char*> ids, std::size_t min_support = 50) {
  std::vector<intentscan::Label> labels;
  for (const char* id : ids) labels.push_back({id, std::string("Name of ") + id});
  return intentscan::LabelRegistry(labels, min_support);
}

// Document of `count` one-character annotations per label.
inline intentscan::Document counted_doc(const std::string& id,
                                        const std::vector<std::pair<std::string, std::size_t>>& counts) {
  intentscan::Document d;
  d.doc_id = id;
  std::size_t total = 0;
  for (const auto& [label, n] : counts) total += n;
  d.text = std::string(total + 1, 'x');
  std::size_t pos = 0;
  for (const auto& [label, n] : counts)
    for (std::size_t i = 0; i < n; ++i, ++pos) d.annotations.push_back({pos, pos + 1, label, std::nullopt});
  return d;
}

// Dataset where each sentence is its own document, labels given by a set of ids.
inline intentscan::Dataset dataset_from(const intentscan::LabelRegistry& reg,
                                        const std::vector<std::pair<std::string, std::vector<std::string>>>& rows,
                                        std::size_t docs_per_row = 1) {
  intentscan::Dataset ds{{}, reg, {"corpus", "segmenter"}};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    intentscan::SentenceExample ex;
    ex.sentence = {"d" + std::to_string(i / docs_per_row), rows[i].first, 0, rows[i].first.size()};
    ex.labels.assign(reg.size(), 0);
    for (const auto& l : rows[i].second) ex.labels[*reg.index_of(l)] = 1;
    ds.examples.push_back(ex);
  }
  return ds;
}

// Dataset with n documents, `per_doc` sentences each.
inline intentscan::Dataset doc_dataset(std::size_t n_docs, std::size_t per_doc = 2) {
  auto reg = registry({"a"});
  intentscan::Dataset ds{{}, reg, {"c", "s"}};
  for (std::size_t d = 0; d < n_docs; ++d)
    for (std::size_t s = 0; s < per_doc; ++s) {
      intentscan::SentenceExample ex;
      ex.sentence = {"doc" + std::to_string(d), "s", s * 2, s * 2 + 1};
      ex.labels = {static_cast<std::uint8_t>(s % 2)};
      ds.examples.push_back(ex);
    }
  return ds;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("intentscan_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace fixtures
