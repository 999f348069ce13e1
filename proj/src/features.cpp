#include "intentscan/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "intentscan/dataset.hpp"
#include "intentscan/errors.hpp"
#include "intentscan/utf8.hpp"

namespace intentscan {

using nlohmann::json;

namespace {

bool is_word_char(char32_t c) {
  if (c < 0x80) {
    return (c >= U'0' && c <= U'9') || (c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z');
  }
  if (c < 0xC0 || c == 0xD7 || c == 0xF7) return false;
  if (c >= 0x2000 && c <= 0x2BFF) return false;  // punctuation, symbols, bullets
  if (c >= 0x3000 && c <= 0x303F) return false;
  return true;
}

char32_t fold_case(char32_t c) {
  if (c >= U'A' && c <= U'Z') return c + 32;
  if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 32;
  return c;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::u32string current;
  for (char32_t c : utf8::decode(text)) {
    if (is_word_char(c)) {
      current.push_back(fold_case(c));
    } else if (!current.empty()) {
      tokens.push_back(utf8::encode(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(utf8::encode(current));
  return tokens;
}

std::vector<std::string> ngrams(const std::vector<std::string>& tokens, std::size_t max_ngram) {
  std::vector<std::string> out;
  for (std::size_t n = 1; n <= max_ngram; ++n) {
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
      std::string g = tokens[i];
      for (std::size_t k = 1; k < n; ++k) {
        g += ' ';
        g += tokens[i + k];
      }
      out.push_back(std::move(g));
    }
  }
  return out;
}

double FeatureVector::norm() const {
  double s = 0.0;
  for (double v : values) s += v * v;
  return std::sqrt(s);
}

FeatureVector from_dense(const std::vector<double>& dense) {
  FeatureVector fv;
  for (std::size_t i = 0; i < dense.size(); ++i) {
    if (dense[i] != 0.0) {
      fv.indices.push_back(i);
      fv.values.push_back(dense[i]);
    }
  }
  return fv;
}

Vocabulary::Vocabulary(std::vector<std::string> ngrams, std::vector<std::size_t> document_frequency,
                       std::size_t n_documents, std::size_t max_ngram, std::size_t min_df)
    : ngrams_(std::move(ngrams)),
      df_(std::move(document_frequency)),
      n_documents_(n_documents),
      max_ngram_(max_ngram),
      min_df_(min_df) {
  if (ngrams_.size() != df_.size()) throw ValidationError("vocabulary: ngram and df lists differ in length");
  if (max_ngram_ == 0) throw ValidationError("vocabulary: max_ngram must be >= 1");
  for (std::size_t i = 0; i < ngrams_.size(); ++i) {
    if (i > 0 && !(ngrams_[i - 1] < ngrams_[i])) {
      throw ValidationError("vocabulary: n-grams must be sorted and unique");
    }
    if (df_[i] == 0 || df_[i] > n_documents_) {
      throw ValidationError("vocabulary: document frequency out of range for '" + ngrams_[i] + "'");
    }
    index_.emplace(ngrams_[i], i);
  }
}

Vocabulary Vocabulary::build(const std::vector<std::string>& texts, std::size_t min_df,
                             std::size_t max_ngram) {
  if (texts.empty()) throw ValidationError("cannot build a vocabulary from an empty training set");
  if (max_ngram == 0) throw ValidationError("max_ngram must be >= 1");
  std::map<std::string, std::size_t> df;
  for (const auto& t : texts) {
    auto grams = intentscan::ngrams(tokenize(t), max_ngram);
    std::sort(grams.begin(), grams.end());
    grams.erase(std::unique(grams.begin(), grams.end()), grams.end());
    for (auto& g : grams) ++df[std::move(g)];
  }
  if (df.empty()) throw ValidationError("training text contains no tokens");
  std::vector<std::string> kept;
  std::vector<std::size_t> kept_df;
  for (auto& [g, n] : df) {
    if (n >= min_df) {
      kept.push_back(g);
      kept_df.push_back(n);
    }
  }
  return Vocabulary(std::move(kept), std::move(kept_df), texts.size(), max_ngram, min_df);
}

std::optional<std::size_t> Vocabulary::find(const std::string& ngram) const {
  auto it = index_.find(ngram);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

double Vocabulary::idf(std::size_t index) const {
  return std::log((1.0 + static_cast<double>(n_documents_)) / (1.0 + static_cast<double>(df_.at(index)))) +
         1.0;
}

json Vocabulary::to_json() const {
  return {{"ngrams", ngrams_},
          {"document_frequency", df_},
          {"n_documents", n_documents_},
          {"max_ngram", max_ngram_},
          {"min_df", min_df_}};
}

Vocabulary Vocabulary::from_json(const json& j) {
  try {
    return Vocabulary(j.at("ngrams").get<std::vector<std::string>>(),
                      j.at("document_frequency").get<std::vector<std::size_t>>(),
                      j.at("n_documents").get<std::size_t>(), j.at("max_ngram").get<std::size_t>(),
                      j.at("min_df").get<std::size_t>());
  } catch (const json::exception& e) {
    throw ValidationError(std::string("vocabulary: ") + e.what());
  }
}

Vocabulary build_vocabulary(const Dataset& train, std::size_t min_df, std::size_t max_ngram) {
  std::vector<std::string> texts;
  texts.reserve(train.examples.size());
  for (const auto& ex : train.examples) texts.push_back(ex.sentence.text);
  return Vocabulary::build(texts, min_df, max_ngram);
}

FeatureVector featurize(std::string_view text, const Vocabulary& vocabulary) {
  std::map<std::size_t, double> tf;
  for (const auto& g : ngrams(tokenize(text), vocabulary.max_ngram())) {
    if (auto idx = vocabulary.find(g)) tf[*idx] += 1.0;
  }
  FeatureVector fv;
  fv.indices.reserve(tf.size());
  fv.values.reserve(tf.size());
  double sq = 0.0;
  for (const auto& [idx, count] : tf) {
    const double w = count * vocabulary.idf(idx);
    fv.indices.push_back(idx);
    fv.values.push_back(w);
    sq += w * w;
  }
  if (sq > 0.0) {
    const double inv = 1.0 / std::sqrt(sq);
    for (auto& v : fv.values) v *= inv;
  }
  return fv;
}

HashingEncoder::HashingEncoder(std::size_t dimension, std::size_t max_ngram)
    : dimension_(dimension), max_ngram_(max_ngram) {
  if (dimension_ == 0) throw ValidationError("hashing encoder: dimension must be positive");
  if (max_ngram_ == 0) throw ValidationError("hashing encoder: max_ngram must be >= 1");
}

std::string HashingEncoder::name() const {
  return "hashing-" + std::to_string(dimension_) + "-" + std::to_string(max_ngram_);
}

std::vector<double> HashingEncoder::encode(std::string_view text) const {
  std::vector<double> v(dimension_, 0.0);
  for (const auto& g : ngrams(tokenize(text), max_ngram_)) {
    const auto h = fnv1a(g);
    v[h % dimension_] += (h >> 63) ? -1.0 : 1.0;
  }
  double sq = 0.0;
  for (double x : v) sq += x * x;
  if (sq > 0.0) {
    const double inv = 1.0 / std::sqrt(sq);
    for (auto& x : v) x *= inv;
  }
  return v;
}

}  // namespace intentscan
