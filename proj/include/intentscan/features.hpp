#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace intentscan {

struct Dataset;

// Lowercased word tokens; runs of non-alphanumeric characters separate
// tokens and numbers are kept. Non-ASCII letters count as word characters.
std::vector<std::string> tokenize(std::string_view text);

// Word n-grams of order 1..max_ngram, bigram parts joined by one space.
std::vector<std::string> ngrams(const std::vector<std::string>& tokens, std::size_t max_ngram);

// Sparse vector; indices strictly increasing, no stored zeros.
struct FeatureVector {
  std::vector<std::size_t> indices;
  std::vector<double> values;

  std::size_t size() const { return indices.size(); }
  bool empty() const { return indices.empty(); }
  double norm() const;
  bool operator==(const FeatureVector&) const = default;
};

// Packs a dense vector, dropping exact zeros.
FeatureVector from_dense(const std::vector<double>& dense);

class Vocabulary {
 public:
  Vocabulary() = default;
  // ngrams must be sorted and unique; df aligned with ngrams.
  Vocabulary(std::vector<std::string> ngrams, std::vector<std::size_t> document_frequency,
             std::size_t n_documents, std::size_t max_ngram, std::size_t min_df);

  // Each text counts as one document for document frequency.
  static Vocabulary build(const std::vector<std::string>& texts, std::size_t min_df = 1,
                          std::size_t max_ngram = 2);

  std::size_t size() const { return ngrams_.size(); }
  std::size_t n_documents() const { return n_documents_; }
  std::size_t max_ngram() const { return max_ngram_; }
  std::size_t min_df() const { return min_df_; }
  const std::vector<std::string>& ngrams() const { return ngrams_; }
  const std::vector<std::size_t>& document_frequency() const { return df_; }
  std::optional<std::size_t> find(const std::string& ngram) const;
  // ln((1 + N) / (1 + df)) + 1
  double idf(std::size_t index) const;

  nlohmann::json to_json() const;
  static Vocabulary from_json(const nlohmann::json& j);

  bool operator==(const Vocabulary& other) const {
    return ngrams_ == other.ngrams_ && df_ == other.df_ && n_documents_ == other.n_documents_ &&
           max_ngram_ == other.max_ngram_ && min_df_ == other.min_df_;
  }

 private:
  std::vector<std::string> ngrams_;
  std::vector<std::size_t> df_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t n_documents_ = 0;
  std::size_t max_ngram_ = 2;
  std::size_t min_df_ = 1;
};

// Vocabulary over the sentence texts of a training set.
Vocabulary build_vocabulary(const Dataset& train, std::size_t min_df = 1,
                            std::size_t max_ngram = 2);

// L2-normalized TF-IDF; out-of-vocabulary n-grams are ignored.
FeatureVector featurize(std::string_view text, const Vocabulary& vocabulary);

// Substitution point for a pretrained sentence encoder. Implementations must
// be deterministic and keep dimension() fixed for their lifetime.
class EncoderBackend {
 public:
  virtual ~EncoderBackend() = default;
  virtual std::string name() const = 0;
  virtual std::size_t dimension() const = 0;
  virtual std::vector<double> encode(std::string_view text) const = 0;
};

// Signed feature hashing of word n-grams into a fixed dimension, L2
// normalized. Needs no fitted state.
class HashingEncoder final : public EncoderBackend {
 public:
  explicit HashingEncoder(std::size_t dimension = 1 << 12, std::size_t max_ngram = 2);
  std::string name() const override;
  std::size_t dimension() const override { return dimension_; }
  std::vector<double> encode(std::string_view text) const override;

 private:
  std::size_t dimension_;
  std::size_t max_ngram_;
};

}  // namespace intentscan
