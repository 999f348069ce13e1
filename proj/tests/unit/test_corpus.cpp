#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "fixtures.hpp"
#include "intentscan/corpus.hpp"
#include "intentscan/errors.hpp"
#include "intentscan/rng.hpp"

using namespace intentscan;

namespace {

CorpusLoadResult parse(const std::string& text, const LabelRegistry* reg = nullptr, LoadOptions opt = {}) {
  std::istringstream in(text);
  return parse_corpus(in, reg, opt);
}

template <typename F>
std::string error_of(F&& f) {
  try {
    f();
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(LoadCorpus, SingleRecord) {
  const auto r = parse(R"({"doc_id":"n1","text":"Book OGD.","annotations":[{"start":0,"end":8,"label":"request_ogd","annotator":"a1"}]})");
  ASSERT_EQ(r.documents.size(), 1u);
  EXPECT_EQ(r.documents[0].doc_id, "n1");
  ASSERT_EQ(r.documents[0].annotations.size(), 1u);
  EXPECT_EQ(r.documents[0].annotations[0].annotator, "a1");
}

TEST(LoadCorpus, SpanPastEndOfText) {
  const auto msg = error_of([] { parse(R"({"doc_id":"n7","text":"abc","annotations":[{"start":0,"end":4,"label":"x"}]})"); });
  EXPECT_NE(msg.find("n7"), std::string::npos);
  EXPECT_NE(msg.find("[0, 4)"), std::string::npos) << msg;
}

TEST(LoadCorpus, DuplicateDocId) {
  const auto msg = error_of([] {
    parse("{\"doc_id\":\"a\",\"text\":\"t\",\"annotations\":[]}\n"
          "{\"doc_id\":\"dup\",\"text\":\"t\",\"annotations\":[]}\n"
          "{\"doc_id\":\"dup\",\"text\":\"t\",\"annotations\":[]}\n");
  });
  EXPECT_NE(msg.find("dup"), std::string::npos) << msg;
}

TEST(LoadCorpus, MalformedRecordNamesLineAndField) {
  const auto msg = error_of([] {
    parse("{\"doc_id\":\"a\",\"text\":\"t\",\"annotations\":[]}\n{\"doc_id\":\"b\",\"annotations\":[]}\n");
  });
  EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
  EXPECT_NE(msg.find("text"), std::string::npos) << msg;
}

TEST(LoadCorpus, EmptyAndInvertedSpansRejected) {
  EXPECT_THROW(parse(R"({"doc_id":"a","text":"abc","annotations":[{"start":2,"end":2,"label":"x"}]})"), ValidationError);
  EXPECT_THROW(parse(R"({"doc_id":"a","text":"abc","annotations":[{"start":2,"end":1,"label":"x"}]})"), ValidationError);
}

TEST(LoadCorpus, OffsetsCountScalarValues) {
  // "é" is two bytes but one offset unit; the span [0,4) is the whole word.
  const auto r = parse(R"({"doc_id":"a","text":"café","annotations":[{"start":0,"end":4,"label":"x"}]})");
  EXPECT_EQ(r.documents.size(), 1u);
  EXPECT_THROW(parse(R"({"doc_id":"a","text":"café","annotations":[{"start":0,"end":5,"label":"x"}]})"), ValidationError);
}

TEST(LoadCorpus, UnknownLabelStrictAndPermissive) {
  const auto reg = fixtures::registry({"discharge"});
  const std::string rec = R"({"doc_id":"a","text":"abcdef","annotations":[{"start":0,"end":2,"label":"discharge"},{"start":2,"end":4,"label":"mystery"}]})";
  EXPECT_NE(error_of([&] { parse(rec, &reg); }).find("mystery"), std::string::npos);
  const auto r = parse(rec, &reg, {true});
  ASSERT_EQ(r.documents.size(), 1u);
  EXPECT_EQ(r.documents[0].annotations.size(), 1u);
  EXPECT_EQ(r.unknown_labels.at("mystery"), 1u);
}

TEST(LoadCorpus, BlankLinesSkippedOrderPreserved) {
  const auto r = parse("{\"doc_id\":\"z\",\"text\":\"t\",\"annotations\":[]}\n\n{\"doc_id\":\"a\",\"text\":\"t\",\"annotations\":[]}\n");
  ASSERT_EQ(r.documents.size(), 2u);
  EXPECT_EQ(r.documents[0].doc_id, "z");
  EXPECT_EQ(r.documents[1].doc_id, "a");
}

TEST(LoadCorpus, MissingFile) {
  EXPECT_THROW(load_corpus("/nonexistent/corpus.jsonl"), ValidationError);
}

TEST(LoadCorpus, RoundTripThroughSerialization) {
  Rng rng(5);
  std::vector<Document> corpus;
  for (int d = 0; d < 30; ++d) {
    Document doc{"doc-" + std::to_string(d), "Seen in clinic • plan «OGD» naïve\nnext", {}};
    const auto n = rng.below(4);
    for (std::uint64_t i = 0; i < n; ++i) {
      const std::size_t s = rng.below(30);
      doc.annotations.push_back({s, s + 1 + rng.below(5), "l" + std::to_string(rng.below(3)),
                                 rng.bernoulli(0.5) ? std::optional<std::string>("ann" + std::to_string(i)) : std::nullopt});
    }
    corpus.push_back(doc);
  }
  const auto reloaded = parse(serialize_corpus(corpus)).documents;
  EXPECT_EQ(reloaded, corpus);
  EXPECT_EQ(serialize_corpus(reloaded), serialize_corpus(corpus));
}

TEST(Registry, RejectsDuplicateIds) {
  EXPECT_THROW(LabelRegistry(std::vector<Label>{{"a", "A"}, {"a", "B"}}), ValidationError);
  EXPECT_THROW(LabelRegistry(std::vector<Label>{{"", "A"}}), ValidationError);
}

TEST(Registry, JsonRoundTripKeepsOrder) {
  const auto reg = fixtures::registry({"zeta", "alpha", "mid"}, 7);
  const auto back = LabelRegistry::from_json(reg.to_json());
  EXPECT_EQ(back, reg);
  EXPECT_EQ(back.ids(), (std::vector<std::string>{"zeta", "alpha", "mid"}));
  EXPECT_EQ(*back.index_of("mid"), 2u);
  EXPECT_EQ(LabelRegistry::from_json(nlohmann::json::parse(R"({"labels":[{"id":"a","name":"A"}]})")).min_support(), 50u);
}

TEST(Stats, EmptyCorpus) {
  const auto s = compute_stats({}, fixtures::registry({"a", "b"}));
  EXPECT_EQ(s.n_documents, 0u);
  EXPECT_EQ(s.n_annotations, 0u);
  for (const auto& [label, n] : s.per_label_counts) EXPECT_EQ(n, 0u);
  EXPECT_DOUBLE_EQ(s.mean_per_label, 0.0);
}

TEST(Stats, SymmetricCounts) {
  const auto s = compute_stats({fixtures::counted_doc("d", {{"A", 99}, {"B", 99}})}, fixtures::registry({"A", "B"}));
  EXPECT_EQ(s.n_annotations, 198u);
  EXPECT_DOUBLE_EQ(s.mean_per_label, 99.0);
  EXPECT_DOUBLE_EQ(s.std_per_label, 0.0);
}

TEST(Stats, ZeroCountLabelsEnterMeanAndPopulationStd) {
  const auto s = compute_stats({fixtures::counted_doc("d", {{"A", 4}})}, fixtures::registry({"A", "B"}));
  EXPECT_DOUBLE_EQ(s.mean_per_label, 2.0);
  EXPECT_DOUBLE_EQ(s.std_per_label, 2.0);  // population: sqrt(((4-2)^2 + (0-2)^2) / 2)
}

TEST(Stats, PublishedShapedAggregates) {
  // 22 labels, 2095 annotations, 11 labels at or above 50.
  const std::vector<std::size_t> counts = {430, 380, 290, 210, 170, 130, 100, 80, 60, 50, 50,
                                           49,  30,  20,  15,  10,  8,   7,   2,  2,  1,  1};
  std::vector<Label> labels;
  std::vector<std::pair<std::string, std::size_t>> per;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    labels.push_back({"i" + std::to_string(i), "I"});
    per.push_back({"i" + std::to_string(i), counts[i]});
  }
  const LabelRegistry reg(labels);
  const std::vector<Document> corpus = {fixtures::counted_doc("d", per)};
  const auto s = compute_stats(corpus, reg);
  EXPECT_EQ(s.n_annotations, 2095u);
  EXPECT_NEAR(s.mean_per_label, 2095.0 / 22.0, 1e-12);
  EXPECT_NEAR(s.std_per_label, 123.0, 0.5);
  EXPECT_EQ(filter_labels_by_support(corpus, reg, 50).kept.size(), 11u);
}

TEST(Stats, AnnotationsOutsideRegistryNotCounted) {
  const auto s = compute_stats({fixtures::counted_doc("d", {{"A", 3}, {"Z", 5}})}, fixtures::registry({"A"}));
  EXPECT_EQ(s.n_annotations, 3u);
}

TEST(Filter, KeepsAtOrAboveThreshold) {
  const std::vector<Document> corpus = {fixtures::counted_doc("d", {{"A", 60}, {"B", 49}, {"C", 50}})};
  const auto r = filter_labels_by_support(corpus, fixtures::registry({"A", "B", "C"}), 50);
  EXPECT_EQ(r.kept.ids(), (std::vector<std::string>{"A", "C"}));
  ASSERT_EQ(r.dropped.size(), 1u);
  EXPECT_EQ(r.dropped[0].id, "B");
  // non-destructive: the corpus still carries B annotations
  EXPECT_EQ(compute_stats(corpus, fixtures::registry({"B"})).n_annotations, 49u);
}

TEST(Filter, ZeroThresholdKeepsAll) {
  std::vector<Label> labels;
  for (int i = 0; i < 22; ++i) labels.push_back({"l" + std::to_string(i), "L"});
  EXPECT_EQ(filter_labels_by_support({}, LabelRegistry(labels), 0).kept.size(), 22u);
}

TEST(Filter, EverythingDroppedIsAnError) {
  EXPECT_THROW(filter_labels_by_support({fixtures::counted_doc("d", {{"A", 1}})}, fixtures::registry({"A"}), 50),
               ValidationError);
}

TEST(Filter, PropertyKeepIffCountAtLeastThreshold) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n_labels = rng.between(1, 8);
    std::vector<Label> labels;
    for (std::size_t i = 0; i < n_labels; ++i) labels.push_back({"L" + std::to_string(i), "x"});
    const LabelRegistry reg(labels);
    std::vector<Document> corpus;
    std::map<std::string, std::size_t> truth;
    for (std::size_t d = 0; d < rng.between(1, 5); ++d) {
      std::vector<std::pair<std::string, std::size_t>> per;
      for (std::size_t i = 0; i < n_labels; ++i) {
        const std::size_t n = rng.below(12);
        per.push_back({labels[i].id, n});
        truth[labels[i].id] += n;
      }
      corpus.push_back(fixtures::counted_doc("d" + std::to_string(d), per));
    }
    const std::size_t t = rng.below(30);
    std::vector<std::string> expected;
    for (const auto& l : labels)
      if (truth[l.id] >= t) expected.push_back(l.id);
    if (expected.empty()) {
      EXPECT_THROW(filter_labels_by_support(corpus, reg, t), ValidationError);
    } else {
      const auto r = filter_labels_by_support(corpus, reg, t);
      EXPECT_EQ(r.kept.ids(), expected);
      EXPECT_EQ(r.kept.size() + r.dropped.size(), n_labels);
    }
  }
}

TEST(Stats, PropertyAnnotationTotalMatchesBruteForce) {
  Rng rng(3);
  const auto reg = fixtures::registry({"a", "b", "c"});
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Document> corpus;
    std::size_t brute = 0;
    for (std::size_t d = 0; d < rng.below(6); ++d) {
      auto doc = fixtures::counted_doc("d" + std::to_string(d),
                                       {{"a", rng.below(5)}, {"b", rng.below(5)}, {"c", rng.below(5)}});
      brute += doc.annotations.size();
      corpus.push_back(doc);
    }
    const auto s = compute_stats(corpus, reg);
    EXPECT_EQ(s.n_annotations, brute);
    std::size_t sum = 0;
    double sq = 0;
    for (const auto& [l, n] : s.per_label_counts) sum += n;
    EXPECT_EQ(sum, s.n_annotations);
    for (const auto& [l, n] : s.per_label_counts) sq += (n - s.mean_per_label) * (n - s.mean_per_label);
    EXPECT_NEAR(s.std_per_label, std::sqrt(sq / 3.0), 1e-12);
  }
}

TEST(Dedupe, IdenticalSpansCollapse) {
  Document d{"d", std::string(20, 'x'), {{5, 12, "discharge", "a1"}, {5, 12, "discharge", "a2"}}};
  EXPECT_EQ(dedupe_annotations(d).annotations.size(), 1u);
}

TEST(Dedupe, OverlappingUnequalSpansKept) {
  Document d{"d", std::string(20, 'x'), {{5, 12, "discharge", {}}, {6, 12, "discharge", {}}, {5, 12, "other", {}}}};
  EXPECT_EQ(dedupe_annotations(d).annotations.size(), 3u);
}

TEST(Dedupe, FixpointAndSortedOrder) {
  Document d{"d", std::string(20, 'x'), {{9, 10, "b", {}}, {1, 3, "z", {}}, {1, 3, "a", {}}}};
  const auto once = dedupe_annotations(d);
  EXPECT_EQ(dedupe_annotations(once), once);
  EXPECT_EQ(once.annotations[0].label, "a");
  EXPECT_EQ(once.annotations[2].start, 9u);
}

TEST(Dedupe, PropertyIdempotentAndNonIncreasing) {
  Rng rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    Document d{"d", std::string(12, 'x'), {}};
    for (std::size_t i = 0; i < rng.below(10); ++i) {
      const std::size_t s = rng.below(4);
      d.annotations.push_back({s, s + 1 + rng.below(2), rng.bernoulli(0.5) ? "a" : "b", std::nullopt});
    }
    const auto once = dedupe_annotations(d);
    EXPECT_LE(once.annotations.size(), d.annotations.size());
    EXPECT_EQ(dedupe_annotations(once), once);
    std::set<std::tuple<std::size_t, std::size_t, std::string>> distinct;
    for (const auto& a : d.annotations) distinct.insert({a.start, a.end, a.label});
    EXPECT_EQ(once.annotations.size(), distinct.size());
  }
}
