#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "intentscan/classifier.hpp"
#include "intentscan/corpus.hpp"
#include "intentscan/dataset.hpp"

namespace intentscan {

struct LabelConfusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
  bool operator==(const LabelConfusion&) const = default;
};

struct ConfusionCounts {
  std::vector<std::string> label_ids;
  std::vector<LabelConfusion> per_label;
  std::size_t n_examples = 0;

  bool operator==(const ConfusionCounts&) const = default;
};

ConfusionCounts count_confusions(std::span<const LabelVector> predictions,
                                 std::span<const LabelVector> gold,
                                 const LabelRegistry& registry);

struct LabelMetrics {
  std::string label;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// precision = tp / (tp + fp), recall = tp / (tp + fn); 0/0 is 0, and f1 is 0
// when precision + recall is 0.
LabelMetrics precision_recall_f1(const LabelConfusion& counts, std::string label = {});

struct MacroAverage {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Unweighted means. Throws ValidationError on an empty list.
MacroAverage macro_average(std::span<const LabelMetrics> metrics);

struct MetricsReport {
  std::vector<LabelMetrics> labels;       // registry order
  std::vector<std::string> display_names;  // aligned with labels
  MacroAverage macro;
  ConfusionCounts counts;
  std::string dataset_hash;
  std::string model_hash;
};

MetricsReport build_report(const ConfusionCounts& counts, const LabelRegistry& registry);
MetricsReport evaluate(const LinearMultilabelModel& model, const Dataset& dataset);

struct CrossValidationResult {
  std::vector<MetricsReport> folds;
  MacroAverage mean;
  MacroAverage stddev;  // population standard deviation across folds
  nlohmann::json to_json() const;
};

// Trains one model per fold on the remaining folds and scores the held-out
// fold. Folds run in index order.
CrossValidationResult cross_validate(const Dataset& train, const FoldAssignment& folds,
                                     const TrainConfig& config);

enum class ReportFormat { tsv, json };

ReportFormat parse_report_format(std::string_view name);
// TSV: Intent/Precision/Recall/F1 rows rounded to 2 decimals, macro row last.
// JSON: full precision with raw confusion counts.
std::string render_report(const MetricsReport& report, ReportFormat format);
std::string render_report(const MetricsReport& report, std::string_view format);
nlohmann::json report_to_json(const MetricsReport& report);
MetricsReport report_from_json(const nlohmann::json& j);

// Reads a TSV produced by render_report. Only per-label display names and
// metrics plus the macro row are recovered.
MetricsReport parse_tsv_report(std::string_view tsv);

}  // namespace intentscan
