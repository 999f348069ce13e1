// intentscan: command-line front end for the clinical intent pipeline.
//
// Exit codes: 0 success, 1 usage error, 2 validation error (bad or missing
// input), 3 runtime failure.

#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "intentscan/classifier.hpp"
#include "intentscan/corpus.hpp"
#include "intentscan/dataset.hpp"
#include "intentscan/errors.hpp"
#include "intentscan/hash.hpp"
#include "intentscan/io.hpp"
#include "intentscan/metrics.hpp"
#include "intentscan/reconciler.hpp"
#include "intentscan/segmenter.hpp"
#include "intentscan/synth.hpp"

#ifndef INTENTSCAN_VERSION
#define INTENTSCAN_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace intentscan;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

class Log {
 public:
  void set_json(bool on) { json_ = on; }

  void info(const std::string& event, const std::string& message, json fields = json::object()) const {
    emit("info", event, message, std::move(fields));
  }
  void warn(const std::string& event, const std::string& message, json fields = json::object()) const {
    emit("warn", event, message, std::move(fields));
  }
  void error(const std::string& message) const { emit("error", "error", message, json::object()); }

 private:
  void emit(const char* level, const std::string& event, const std::string& message, json fields) const {
    if (json_) {
      fields["level"] = level;
      fields["event"] = event;
      fields["message"] = message;
      std::cerr << fields.dump() << "\n";
    } else {
      std::cerr << "[" << level << "] " << message << "\n";
    }
  }
  bool json_ = false;
};

Log g_log;

// Records everything needed to repeat a run next to its primary output.
class Manifest {
 public:
  explicit Manifest(std::string subcommand) : subcommand_(std::move(subcommand)) {}

  void input(const std::string& role, const fs::path& path) {
    inputs_[role] = {{"path", path.string()}, {"sha256", sha256_file(path)}};
  }
  void output(const fs::path& path) { outputs_.push_back(path.string()); }
  void config(const std::string& key, json value) { config_[key] = std::move(value); }
  void seed(std::uint64_t s) { seed_ = s; }

  void write(const fs::path& path) const {
    json j = {{"subcommand", subcommand_},
              {"tool_version", INTENTSCAN_VERSION},
              {"config", config_},
              {"inputs", inputs_},
              {"outputs", outputs_}};
    j["seed"] = seed_ ? json(*seed_) : json(nullptr);
    io::write_file(path, j.dump(2) + "\n");
  }

 private:
  std::string subcommand_;
  json config_ = json::object();
  json inputs_ = json::object();
  std::vector<std::string> outputs_;
  std::optional<std::uint64_t> seed_;
};

fs::path with_suffix(const fs::path& base, const std::string& suffix) {
  fs::path p = base;
  p += suffix;
  return p;
}

// --seed, then INTENTSCAN_SEED, then the fallback.
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, std::uint64_t fallback) {
  if (flag) return *flag;
  if (const char* env = std::getenv("INTENTSCAN_SEED"); env && *env) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used);
      if (used == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw ValidationError(std::string("INTENTSCAN_SEED is not an unsigned integer: ") + env);
  }
  return fallback;
}

bool seed_overridden(const std::optional<std::uint64_t>& flag) {
  const char* env = std::getenv("INTENTSCAN_SEED");
  return flag.has_value() || (env && *env);
}

void require_file(const fs::path& path, const std::string& what) {
  if (!fs::is_regular_file(path)) throw ValidationError(what + " not found: " + path.string());
}

std::shared_ptr<const EncoderBackend> encoder_for(const std::string& spec) {
  if (spec.empty() || spec == "tfidf") return nullptr;
  // hashing or hashing-<dim> or hashing-<dim>-<max_ngram>
  if (spec.rfind("hashing", 0) == 0) {
    std::size_t dim = 1 << 12;
    std::size_t max_ngram = 2;
    std::string rest = spec.substr(7);
    try {
      if (!rest.empty()) {
        if (rest[0] != '-') throw ValidationError("bad encoder spec");
        rest = rest.substr(1);
        const auto dash = rest.find('-');
        dim = std::stoul(rest.substr(0, dash));
        if (dash != std::string::npos) max_ngram = std::stoul(rest.substr(dash + 1));
      }
    } catch (const std::exception&) {
      throw ValidationError("unknown encoder '" + spec + "'");
    }
    return std::make_shared<HashingEncoder>(dim, max_ngram);
  }
  throw ValidationError("unknown encoder '" + spec + "' (expected tfidf or hashing[-DIM[-N]])");
}

// Reads the encoder recorded in a model artifact so it can be rebuilt.
std::shared_ptr<const EncoderBackend> encoder_of_model(const fs::path& model_path) {
  require_file(model_path, "model file");
  json j;
  try {
    j = json::parse(io::read_file(model_path));
  } catch (const json::parse_error&) {
    return nullptr;  // load_model reports the corruption
  }
  if (j.contains("encoder") && j["encoder"].value("kind", "") == "external") {
    return encoder_for(j["encoder"].value("name", ""));
  }
  return nullptr;
}

// --- subcommands -----------------------------------------------------------

struct SegmentArgs {
  fs::path in, out, config;
};

void run_segment(const SegmentArgs& a) {
  Manifest m("segment");
  require_file(a.in, "corpus file");
  const SegmenterConfig cfg = a.config.empty() ? SegmenterConfig{} : SegmenterConfig::load(a.config);
  m.input("corpus", a.in);
  if (!a.config.empty()) m.input("config", a.config);
  m.config("segmenter", cfg.to_json());

  const auto corpus = load_corpus(a.in).documents;
  std::string out;
  std::size_t n_sentences = 0;
  std::size_t n_warnings = 0;
  for (const auto& doc : corpus) {
    const auto sentences = segment(doc, cfg);
    for (const auto& w : check_annotation_alignment(doc, sentences)) {
      g_log.warn("alignment", w.message(), {{"doc_id", w.doc_id}});
      ++n_warnings;
    }
    for (const auto& s : sentences) out += sentence_to_json(s).dump() + "\n";
    n_sentences += sentences.size();
  }
  io::write_file(a.out, out);
  m.output(a.out);
  m.write(with_suffix(a.out, ".manifest.json"));
  g_log.info("segment", "wrote " + std::to_string(n_sentences) + " sentences from " +
                            std::to_string(corpus.size()) + " documents",
             {{"sentences", n_sentences}, {"documents", corpus.size()}, {"alignment_warnings", n_warnings}});
}

struct BuildArgs {
  fs::path corpus, registry, out, segmenter_config;
  std::optional<std::size_t> min_support;
  bool include_negatives = true;
  bool permissive_labels = false;
};

void run_build_dataset(const BuildArgs& a) {
  Manifest m("build-dataset");
  require_file(a.corpus, "corpus file");
  require_file(a.registry, "registry file");
  const auto registry = LabelRegistry::load(a.registry);
  const SegmenterConfig seg =
      a.segmenter_config.empty() ? SegmenterConfig{} : SegmenterConfig::load(a.segmenter_config);
  const std::size_t min_support = a.min_support.value_or(registry.min_support());
  m.input("corpus", a.corpus);
  m.input("registry", a.registry);
  if (!a.segmenter_config.empty()) m.input("segmenter_config", a.segmenter_config);
  m.config("min_support", min_support);
  m.config("include_negatives", a.include_negatives);
  m.config("permissive_labels", a.permissive_labels);
  m.config("segmenter", seg.to_json());

  auto loaded = load_corpus(a.corpus, &registry, {a.permissive_labels});
  for (const auto& [label, count] : loaded.unknown_labels) {
    g_log.warn("unknown-label", "skipped " + std::to_string(count) + " annotations with unknown label '" + label + "'");
  }
  std::vector<Document> corpus;
  corpus.reserve(loaded.documents.size());
  for (const auto& doc : loaded.documents) corpus.push_back(dedupe_annotations(doc));

  const auto stats = compute_stats(corpus, registry);
  const auto filtered = filter_labels_by_support(corpus, registry, min_support);
  for (const auto& l : filtered.dropped) {
    g_log.info("drop-label", "dropping '" + l.id + "' (" + std::to_string(stats.count(l.id)) + " < " +
                                 std::to_string(min_support) + " annotations)");
  }

  std::vector<std::vector<Sentence>> sentences;
  std::size_t n_warnings = 0;
  for (const auto& doc : corpus) {
    sentences.push_back(segment(doc, seg));
    for (const auto& w : check_annotation_alignment(doc, sentences.back())) {
      g_log.warn("alignment", w.message(), {{"doc_id", w.doc_id}});
      ++n_warnings;
    }
  }
  const Dataset ds = build_examples(corpus, sentences, filtered.kept, seg, a.include_negatives);
  save_dataset(a.out, ds);

  json dropped = json::array();
  for (const auto& l : filtered.dropped) dropped.push_back(l.id);
  json report = {{"stats", stats.to_json()},
                 {"kept_labels", filtered.kept.ids()},
                 {"dropped_labels", dropped},
                 {"unknown_labels", loaded.unknown_labels},
                 {"alignment_warnings", n_warnings},
                 {"n_examples", ds.examples.size()}};
  const auto stats_path = with_suffix(a.out, ".stats.json");
  io::write_file(stats_path, report.dump(2) + "\n");
  m.output(a.out);
  m.output(dataset_meta_path(a.out));
  m.output(stats_path);
  m.write(with_suffix(a.out, ".manifest.json"));
  g_log.info("build-dataset",
             "wrote " + std::to_string(ds.examples.size()) + " examples over " +
                 std::to_string(filtered.kept.size()) + " labels (" + std::to_string(filtered.dropped.size()) +
                 " dropped)",
             {{"examples", ds.examples.size()}, {"kept", filtered.kept.size()}, {"dropped", filtered.dropped.size()}});
}

struct SplitArgs {
  fs::path dataset, out;
  double test_fraction = 0.2;
  std::size_t k = 5;
  std::optional<std::uint64_t> seed;
};

void run_split(const SplitArgs& a) {
  Manifest m("split");
  require_file(a.dataset, "dataset file");
  SplitSpec spec{a.test_fraction, a.k, resolve_seed(a.seed, 0)};
  spec.validate();
  m.input("dataset", a.dataset);
  m.config("test_fraction", spec.test_fraction);
  m.config("k_folds", spec.k_folds);
  m.seed(spec.seed);

  const Dataset ds = load_dataset(a.dataset);
  const auto split = split_train_test(ds, spec);
  const auto folds = make_folds(split.train, spec);

  fs::create_directories(a.out);
  save_dataset(a.out / "train.jsonl", split.train);
  save_dataset(a.out / "test.jsonl", split.test);
  const json split_json = {{"seed", spec.seed},
                           {"test_fraction", spec.test_fraction},
                           {"train_docs", split.train_docs},
                           {"test_docs", split.test_docs}};
  io::write_file(a.out / "split.json", split_json.dump(2) + "\n");
  io::write_file(a.out / "folds.json", folds.to_json().dump(2) + "\n");
  for (const char* name : {"train.jsonl", "test.jsonl", "split.json", "folds.json"}) m.output(a.out / name);
  m.write(a.out / "manifest.json");
  g_log.info("split",
             std::to_string(split.train_docs.size()) + " train / " + std::to_string(split.test_docs.size()) +
                 " test documents, " + std::to_string(spec.k_folds) + " folds",
             {{"train_docs", split.train_docs.size()}, {"test_docs", split.test_docs.size()}});
}

TrainConfig load_train_config(const fs::path& path, const std::optional<std::uint64_t>& seed) {
  TrainConfig cfg;
  if (!path.empty()) {
    require_file(path, "train config");
    try {
      cfg = TrainConfig::from_json(json::parse(io::read_file(path)));
    } catch (const json::exception& e) {
      throw ValidationError(path.string() + ": " + e.what());
    }
  }
  if (seed_overridden(seed)) cfg.seed = resolve_seed(seed, cfg.seed);
  return cfg;
}

struct TrainArgs {
  fs::path train, val, config, out_model;
  std::optional<std::uint64_t> seed;
  bool tune_thresholds = false;
  std::string encoder = "tfidf";
};

void run_train(const TrainArgs& a) {
  Manifest m("train");
  require_file(a.train, "training dataset");
  if (!a.val.empty()) require_file(a.val, "validation dataset");
  if (a.tune_thresholds && a.val.empty()) throw ValidationError("--tune-thresholds needs --val");
  const TrainConfig cfg = load_train_config(a.config, a.seed);
  auto encoder = encoder_for(a.encoder);
  m.input("train", a.train);
  if (!a.val.empty()) m.input("val", a.val);
  if (!a.config.empty()) m.input("config", a.config);
  m.config("train", cfg.to_json());
  m.config("tune_thresholds", a.tune_thresholds);
  m.config("encoder", a.encoder);
  m.seed(cfg.seed);

  const Dataset train = load_dataset(a.train);
  std::optional<Dataset> val;
  if (!a.val.empty()) val = load_dataset(a.val);
  auto result = train_one_vs_rest(train, val ? &*val : nullptr, cfg, encoder);
  if (a.tune_thresholds) tune_thresholds(result.model, *val);
  for (const auto& l : result.report.degenerate_labels) {
    g_log.warn("degenerate-label", "label '" + l + "' has no positive or no negative examples; constant model used");
  }
  save_model(result.model, a.out_model);
  const auto report_path = with_suffix(a.out_model, ".train.json");
  io::write_file(report_path, result.report.to_json().dump(2) + "\n");
  m.output(a.out_model);
  m.output(report_path);
  m.write(with_suffix(a.out_model, ".manifest.json"));
  g_log.info("train", "trained " + std::to_string(result.model.n_labels()) + " labels for " +
                          std::to_string(result.report.epochs_run) + " epochs",
             {{"epochs_run", result.report.epochs_run}, {"best_epoch", result.report.best_epoch}});
}

struct EvaluateArgs {
  fs::path model, dataset, out_report;
};

void run_evaluate(const EvaluateArgs& a) {
  Manifest m("evaluate");
  require_file(a.model, "model file");
  require_file(a.dataset, "dataset file");
  m.input("model", a.model);
  m.input("dataset", a.dataset);

  const auto model = load_model(a.model, encoder_of_model(a.model));
  const Dataset ds = load_dataset(a.dataset);
  MetricsReport report = evaluate(model, ds);
  report.model_hash = sha256_file(a.model);
  const auto tsv = render_report(report, ReportFormat::tsv);
  const auto tsv_path = with_suffix(a.out_report, ".metrics.tsv");
  const auto json_path = with_suffix(a.out_report, ".metrics.json");
  io::write_file(tsv_path, tsv);
  io::write_file(json_path, render_report(report, ReportFormat::json));
  m.output(tsv_path);
  m.output(json_path);
  m.write(with_suffix(a.out_report, ".manifest.json"));
  std::cout << tsv;
  g_log.info("evaluate", "macro F1 " + std::to_string(report.macro.f1),
             {{"macro_precision", report.macro.precision},
              {"macro_recall", report.macro.recall},
              {"macro_f1", report.macro.f1}});
}

struct CvArgs {
  fs::path dataset, folds, config, out;
  std::optional<std::uint64_t> seed;
};

void run_cv(const CvArgs& a) {
  Manifest m("cv");
  require_file(a.dataset, "dataset file");
  require_file(a.folds, "folds file");
  const TrainConfig cfg = load_train_config(a.config, a.seed);
  m.input("dataset", a.dataset);
  m.input("folds", a.folds);
  if (!a.config.empty()) m.input("config", a.config);
  m.config("train", cfg.to_json());
  m.seed(cfg.seed);

  const Dataset ds = load_dataset(a.dataset);
  FoldAssignment folds;
  try {
    folds = FoldAssignment::from_json(json::parse(io::read_file(a.folds)));
  } catch (const json::exception& e) {
    throw ValidationError(a.folds.string() + ": " + e.what());
  }
  const auto result = cross_validate(ds, folds, cfg);

  const auto fixed = [](double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << v;
    return os.str();
  };
  std::string tsv = "Fold\tMacroPrecision\tMacroRecall\tMacroF1\n";
  for (std::size_t f = 0; f < result.folds.size(); ++f) {
    const auto& mac = result.folds[f].macro;
    tsv += std::to_string(f) + "\t" + fixed(mac.precision) + "\t" + fixed(mac.recall) + "\t" + fixed(mac.f1) + "\n";
  }
  tsv += "mean\t" + fixed(result.mean.precision) + "\t" + fixed(result.mean.recall) + "\t" + fixed(result.mean.f1) + "\n";
  tsv += "std\t" + fixed(result.stddev.precision) + "\t" + fixed(result.stddev.recall) + "\t" +
         fixed(result.stddev.f1) + "\n";
  const auto json_path = with_suffix(a.out, ".cv.json");
  const auto tsv_path = with_suffix(a.out, ".cv.tsv");
  io::write_file(json_path, result.to_json().dump(2) + "\n");
  io::write_file(tsv_path, tsv);
  m.output(json_path);
  m.output(tsv_path);
  m.write(with_suffix(a.out, ".manifest.json"));
  std::cout << tsv;
}

struct PredictArgs {
  fs::path model, in, out, segmenter_config;
  bool all_sentences = false;
};

void run_predict(const PredictArgs& a) {
  Manifest m("predict");
  require_file(a.model, "model file");
  require_file(a.in, "input corpus");
  const SegmenterConfig seg =
      a.segmenter_config.empty() ? SegmenterConfig{} : SegmenterConfig::load(a.segmenter_config);
  m.input("model", a.model);
  m.input("in", a.in);
  if (!a.segmenter_config.empty()) m.input("segmenter_config", a.segmenter_config);
  m.config("all_sentences", a.all_sentences);

  const auto model = load_model(a.model, encoder_of_model(a.model));
  const auto corpus = load_corpus(a.in).documents;
  std::string out;
  std::size_t n_detections = 0;
  for (const auto& doc : corpus) {
    for (const auto& s : segment(doc, seg)) {
      const auto probs = predict_probs(model, s.text);
      SentencePrediction p{s, {}, {}};
      for (std::size_t l = 0; l < probs.size(); ++l) {
        const auto& id = model.registry.at(l).id;
        p.probabilities[id] = probs[l];
        if (probs[l] >= model.thresholds[l]) p.labels.push_back(id);
      }
      if (p.labels.empty() && !a.all_sentences) continue;
      n_detections += p.labels.size();
      out += prediction_to_json(p).dump() + "\n";
    }
  }
  io::write_file(a.out, out);
  m.output(a.out);
  m.write(with_suffix(a.out, ".manifest.json"));
  g_log.info("predict", std::to_string(n_detections) + " sentence-level intent detections",
             {{"detections", n_detections}});
}

struct ReconcileArgs {
  fs::path detections, orders, map, out, registry;
};

void run_reconcile(const ReconcileArgs& a) {
  Manifest m("reconcile");
  require_file(a.detections, "detections file");
  require_file(a.orders, "orders file");
  require_file(a.map, "intent-order map");
  m.input("detections", a.detections);
  m.input("orders", a.orders);
  m.input("map", a.map);

  const auto map = IntentOrderMap::load(a.map);
  if (!a.registry.empty()) {
    require_file(a.registry, "registry file");
    m.input("registry", a.registry);
    map.validate(LabelRegistry::load(a.registry));
  }
  const auto predictions = load_predictions(a.detections);
  const auto detections = collapse_detections(predictions);
  const auto orders = load_orders(a.orders);
  const auto report = reconcile(detections, orders, map);
  for (const auto& l : report.unmappable_labels) {
    g_log.warn("unmappable", "intent '" + l + "' has no entry in the intent-order map");
  }
  const auto json_path = with_suffix(a.out, ".gaps.json");
  const auto tsv_path = with_suffix(a.out, ".gaps.tsv");
  io::write_file(json_path, report.to_json().dump(2) + "\n");
  io::write_file(tsv_path, report.to_tsv());
  m.output(json_path);
  m.output(tsv_path);
  m.write(with_suffix(a.out, ".manifest.json"));
  std::size_t missing = 0;
  for (const auto& f : report.findings) missing += f.status == FindingStatus::missing_order;
  g_log.info("reconcile",
             std::to_string(missing) + " of " + std::to_string(report.findings.size()) + " detections have no order",
             {{"findings", report.findings.size()}, {"missing_order", missing}});
}

struct GenArgs {
  fs::path templates, config, out, registry_out;
  std::optional<std::uint64_t> seed;
  std::size_t min_support = LabelRegistry::kDefaultMinSupport;
};

void run_gen_corpus(const GenArgs& a) {
  Manifest m("gen-corpus");
  require_file(a.templates, "templates file");
  require_file(a.config, "generator config");
  const auto templates = TemplateSet::load(a.templates);
  auto cfg = GenConfig::load(a.config);
  if (seed_overridden(a.seed)) cfg.seed = resolve_seed(a.seed, cfg.seed);
  m.input("templates", a.templates);
  m.input("config", a.config);
  m.config("gen", cfg.to_json());
  m.seed(cfg.seed);

  const auto corpus = generate(templates, cfg);
  save_corpus(a.out, corpus);
  m.output(a.out);
  if (!a.registry_out.empty()) {
    const auto registry = generated_registry(templates, cfg, a.min_support);
    io::write_file(a.registry_out, registry.to_json().dump(2) + "\n");
    m.output(a.registry_out);
  }
  m.write(with_suffix(a.out, ".manifest.json"));
  std::size_t n_ann = 0;
  for (const auto& d : corpus) n_ann += d.annotations.size();
  g_log.info("gen-corpus",
             "generated " + std::to_string(corpus.size()) + " documents with " + std::to_string(n_ann) + " annotations",
             {{"documents", corpus.size()}, {"annotations", n_ann}});
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"intentscan: detect follow-up intent in clinical notes and reconcile it against placed orders"};
  app.set_version_flag("--version", std::string(INTENTSCAN_VERSION));
  app.require_subcommand(1);
  bool json_logs = false;
  app.add_flag("--json-logs", json_logs, "Emit progress as JSON lines on stderr");

  SegmentArgs seg_args;
  auto* seg = app.add_subcommand("segment", "Split documents into sentences (JSON-lines output)");
  seg->add_option("--in", seg_args.in, "Corpus JSON-lines file")->required();
  seg->add_option("--out", seg_args.out, "Sentence JSON-lines output")->required();
  seg->add_option("--config", seg_args.config, "Segmenter config JSON");

  BuildArgs build_args;
  auto* build = app.add_subcommand("build-dataset", "Segment a corpus and project annotations onto sentences");
  build->add_option("--corpus", build_args.corpus, "Corpus JSON-lines file")->required();
  build->add_option("--registry", build_args.registry, "Label registry JSON")->required();
  build->add_option("--min-support", build_args.min_support,
                    "Drop labels with fewer annotations (default: registry min_support, 50)");
  build->add_flag("--include-negatives,!--exclude-negatives", build_args.include_negatives,
                  "Keep sentences without any kept label (default on)");
  build->add_flag("--permissive-labels", build_args.permissive_labels,
                  "Skip annotations with labels missing from the registry instead of failing");
  build->add_option("--segmenter-config", build_args.segmenter_config, "Segmenter config JSON");
  build->add_option("--out", build_args.out, "Dataset JSON-lines output")->required();

  SplitArgs split_args;
  auto* split = app.add_subcommand("split", "Document-level train/test split and cross-validation folds");
  split->add_option("--dataset", split_args.dataset, "Dataset JSON-lines file")->required();
  split->add_option("--test-fraction", split_args.test_fraction, "Fraction of documents held out")
      ->capture_default_str();
  split->add_option("--k", split_args.k, "Number of folds over the training side")->capture_default_str();
  split->add_option("--seed", split_args.seed, "Shuffle seed (fallback: INTENTSCAN_SEED, then 0)");
  split->add_option("--out", split_args.out, "Output directory")->required();

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train the one-vs-rest classifier");
  train->add_option("--train", train_args.train, "Training dataset")->required();
  train->add_option("--val", train_args.val, "Validation dataset for early stopping");
  train->add_option("--config", train_args.config, "Train config JSON");
  train->add_option("--seed", train_args.seed, "Overrides the config seed");
  train->add_flag("--tune-thresholds", train_args.tune_thresholds, "Tune per-label thresholds on --val");
  train->add_option("--encoder", train_args.encoder, "tfidf (default) or hashing[-DIM[-N]]")->capture_default_str();
  train->add_option("--out-model", train_args.out_model, "Model artifact path")->required();

  EvaluateArgs eval_args;
  auto* eval = app.add_subcommand("evaluate", "Score a model on a dataset");
  eval->add_option("--model", eval_args.model, "Model artifact")->required();
  eval->add_option("--dataset", eval_args.dataset, "Dataset JSON-lines file")->required();
  eval->add_option("--out-report", eval_args.out_report, "Report path prefix (<prefix>.metrics.tsv/.json)")
      ->required();

  CvArgs cv_args;
  auto* cv = app.add_subcommand("cv", "Cross-validate over precomputed folds");
  cv->add_option("--dataset", cv_args.dataset, "Training dataset")->required();
  cv->add_option("--folds", cv_args.folds, "folds.json from split")->required();
  cv->add_option("--config", cv_args.config, "Train config JSON");
  cv->add_option("--seed", cv_args.seed, "Overrides the config seed");
  cv->add_option("--out", cv_args.out, "Output path prefix (<prefix>.cv.json/.tsv)")->required();

  PredictArgs predict_args;
  auto* predict = app.add_subcommand("predict", "Detect intents sentence by sentence");
  predict->add_option("--model", predict_args.model, "Model artifact")->required();
  predict->add_option("--in", predict_args.in, "Corpus JSON-lines file (annotations optional)")->required();
  predict->add_option("--out", predict_args.out, "Detections JSON-lines output")->required();
  predict->add_option("--segmenter-config", predict_args.segmenter_config, "Segmenter config JSON");
  predict->add_flag("--all-sentences", predict_args.all_sentences, "Also write sentences with no detected intent");

  ReconcileArgs rec_args;
  auto* rec = app.add_subcommand("reconcile", "Flag detected intents without a matching order");
  rec->add_option("--detections", rec_args.detections, "Detections from predict")->required();
  rec->add_option("--orders", rec_args.orders, "Orders ledger JSON-lines")->required();
  rec->add_option("--map", rec_args.map, "Intent to order-type map JSON")->required();
  rec->add_option("--registry", rec_args.registry, "Registry used to validate the map");
  rec->add_option("--out", rec_args.out, "Output path prefix (<prefix>.gaps.json/.tsv)")->required();

  GenArgs gen_args;
  auto* gen = app.add_subcommand("gen-corpus", "Generate a synthetic annotated corpus");
  gen->add_option("--templates", gen_args.templates, "Template set JSON")->required();
  gen->add_option("--config", gen_args.config, "Generator config JSON")->required();
  gen->add_option("--seed", gen_args.seed, "Overrides the config seed");
  gen->add_option("--registry-out", gen_args.registry_out, "Also write the generated label registry");
  gen->add_option("--min-support", gen_args.min_support, "min_support recorded in --registry-out")
      ->capture_default_str();
  gen->add_option("--out", gen_args.out, "Corpus JSON-lines output")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }
  g_log.set_json(json_logs);

  try {
    if (*seg) run_segment(seg_args);
    else if (*build) run_build_dataset(build_args);
    else if (*split) run_split(split_args);
    else if (*train) run_train(train_args);
    else if (*eval) run_evaluate(eval_args);
    else if (*cv) run_cv(cv_args);
    else if (*predict) run_predict(predict_args);
    else if (*rec) run_reconcile(rec_args);
    else if (*gen) run_gen_corpus(gen_args);
  } catch (const ValidationError& e) {
    g_log.error(e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    g_log.error(e.what());
    return kExitRuntime;
  }
  return 0;
}
