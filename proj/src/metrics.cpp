#include "intentscan/metrics.hpp"

#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

#include "intentscan/errors.hpp"
#include "intentscan/hash.hpp"

namespace intentscan {

using nlohmann::json;

namespace {

constexpr const char* kMacroRow = "Macro average";
constexpr const char* kPrecisionNote =
    "precision = TP / (TP + FP); recall = TP / (TP + FN); F1 = 2PR / (P + R); 0/0 reported as 0. "
    "A variant with TN in the precision numerator is not used because it can exceed 1.";

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

std::string fixed2(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << v;
  return os.str();
}

MacroAverage mean_of(const std::vector<MacroAverage>& xs) {
  MacroAverage m;
  for (const auto& x : xs) {
    m.precision += x.precision;
    m.recall += x.recall;
    m.f1 += x.f1;
  }
  const double n = static_cast<double>(xs.size());
  return {m.precision / n, m.recall / n, m.f1 / n};
}

}  // namespace

ConfusionCounts count_confusions(std::span<const LabelVector> predictions, std::span<const LabelVector> gold,
                                 const LabelRegistry& registry) {
  if (predictions.size() != gold.size()) {
    throw ValidationError("count_confusions: " + std::to_string(predictions.size()) + " predictions vs " +
                          std::to_string(gold.size()) + " gold examples");
  }
  const std::size_t L = registry.size();
  ConfusionCounts counts;
  counts.label_ids = registry.ids();
  counts.per_label.assign(L, {});
  counts.n_examples = gold.size();
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (predictions[i].size() != L || gold[i].size() != L) {
      throw ValidationError("count_confusions: label vector length mismatch at example " + std::to_string(i));
    }
    for (std::size_t l = 0; l < L; ++l) {
      const bool p = predictions[i][l] != 0;
      const bool g = gold[i][l] != 0;
      auto& c = counts.per_label[l];
      if (p && g) ++c.tp;
      else if (p) ++c.fp;
      else if (g) ++c.fn;
      else ++c.tn;
    }
  }
  return counts;
}

LabelMetrics precision_recall_f1(const LabelConfusion& counts, std::string label) {
  LabelMetrics m;
  m.label = std::move(label);
  m.precision = ratio(counts.tp, counts.tp + counts.fp);
  m.recall = ratio(counts.tp, counts.tp + counts.fn);
  const double sum = m.precision + m.recall;
  m.f1 = sum == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / sum;
  return m;
}

MacroAverage macro_average(std::span<const LabelMetrics> metrics) {
  if (metrics.empty()) throw ValidationError("macro_average needs at least one label");
  MacroAverage m;
  for (const auto& x : metrics) {
    m.precision += x.precision;
    m.recall += x.recall;
    m.f1 += x.f1;
  }
  const double n = static_cast<double>(metrics.size());
  return {m.precision / n, m.recall / n, m.f1 / n};
}

MetricsReport build_report(const ConfusionCounts& counts, const LabelRegistry& registry) {
  if (counts.label_ids != registry.ids()) throw ValidationError("build_report: counts and registry disagree");
  MetricsReport r;
  r.counts = counts;
  for (std::size_t l = 0; l < registry.size(); ++l) {
    r.labels.push_back(precision_recall_f1(counts.per_label[l], registry.at(l).id));
    r.display_names.push_back(registry.at(l).name);
  }
  r.macro = macro_average(r.labels);
  return r;
}

MetricsReport evaluate(const LinearMultilabelModel& model, const Dataset& dataset) {
  if (dataset.registry.ids() != model.registry.ids()) {
    throw ValidationError("evaluate: dataset registry differs from the model's");
  }
  std::vector<LabelVector> predictions;
  std::vector<LabelVector> gold;
  predictions.reserve(dataset.examples.size());
  gold.reserve(dataset.examples.size());
  for (const auto& ex : dataset.examples) {
    predictions.push_back(predict_label_vector(model, ex.sentence.text));
    gold.push_back(ex.labels);
  }
  MetricsReport r = build_report(count_confusions(predictions, gold, dataset.registry), model.registry);
  r.dataset_hash = dataset_fingerprint(dataset);
  return r;
}

json CrossValidationResult::to_json() const {
  json folds_json = json::array();
  for (const auto& f : folds) folds_json.push_back(report_to_json(f));
  const auto macro = [](const MacroAverage& m) {
    return json{{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
  };
  return {{"folds", folds_json}, {"mean", macro(mean)}, {"std", macro(stddev)}, {"std_kind", "population"}};
}

CrossValidationResult cross_validate(const Dataset& train, const FoldAssignment& folds, const TrainConfig& config) {
  const auto docs = train.document_ids();
  for (const auto& d : docs) {
    if (!folds.fold_of_doc.count(d)) throw ValidationError("cross_validate: document '" + d + "' has no fold");
  }
  CrossValidationResult result;
  std::vector<MacroAverage> macros;
  for (std::size_t f = 0; f < folds.k; ++f) {
    const auto in_fold = [&](const std::string& id) {
      auto it = folds.fold_of_doc.find(id);
      return it != folds.fold_of_doc.end() && it->second == f;
    };
    const Dataset held_out = train.subset(in_fold);
    const Dataset fit = train.subset([&](const std::string& id) { return !in_fold(id); });
    if (held_out.examples.empty()) throw ValidationError("cross_validate: fold " + std::to_string(f) + " has no examples");
    if (fit.examples.empty()) throw ValidationError("cross_validate: no training examples outside fold " + std::to_string(f));
    const auto trained = train_one_vs_rest(fit, nullptr, config);
    MetricsReport report = evaluate(trained.model, held_out);
    report.model_hash = sha256_hex(serialize_model(trained.model));
    macros.push_back(report.macro);
    result.folds.push_back(std::move(report));
  }
  result.mean = mean_of(macros);
  MacroAverage var;
  for (const auto& m : macros) {
    var.precision += (m.precision - result.mean.precision) * (m.precision - result.mean.precision);
    var.recall += (m.recall - result.mean.recall) * (m.recall - result.mean.recall);
    var.f1 += (m.f1 - result.mean.f1) * (m.f1 - result.mean.f1);
  }
  const double n = static_cast<double>(macros.size());
  result.stddev = {std::sqrt(var.precision / n), std::sqrt(var.recall / n), std::sqrt(var.f1 / n)};
  return result;
}

ReportFormat parse_report_format(std::string_view name) {
  if (name == "tsv") return ReportFormat::tsv;
  if (name == "json") return ReportFormat::json;
  throw ValidationError("unknown report format '" + std::string(name) + "' (expected tsv or json)");
}

json report_to_json(const MetricsReport& report) {
  json labels = json::array();
  for (std::size_t l = 0; l < report.labels.size(); ++l) {
    const auto& m = report.labels[l];
    json entry = {{"label", m.label},
                  {"name", l < report.display_names.size() ? report.display_names[l] : m.label},
                  {"precision", m.precision},
                  {"recall", m.recall},
                  {"f1", m.f1}};
    if (l < report.counts.per_label.size()) {
      const auto& c = report.counts.per_label[l];
      entry["counts"] = {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"tn", c.tn}};
    }
    labels.push_back(std::move(entry));
  }
  return {{"labels", labels},
          {"macro", {{"precision", report.macro.precision}, {"recall", report.macro.recall}, {"f1", report.macro.f1}}},
          {"n_examples", report.counts.n_examples},
          {"provenance", {{"dataset_hash", report.dataset_hash}, {"model_hash", report.model_hash}}},
          {"notes", kPrecisionNote}};
}

MetricsReport report_from_json(const json& j) {
  MetricsReport r;
  try {
    for (const auto& e : j.at("labels")) {
      r.labels.push_back({e.at("label").get<std::string>(), e.at("precision").get<double>(),
                          e.at("recall").get<double>(), e.at("f1").get<double>()});
      r.display_names.push_back(e.value("name", r.labels.back().label));
      r.counts.label_ids.push_back(r.labels.back().label);
      LabelConfusion c;
      if (e.contains("counts")) {
        const auto& jc = e["counts"];
        c = {jc.at("tp").get<std::size_t>(), jc.at("fp").get<std::size_t>(), jc.at("fn").get<std::size_t>(),
             jc.at("tn").get<std::size_t>()};
      }
      r.counts.per_label.push_back(c);
    }
    const auto& m = j.at("macro");
    r.macro = {m.at("precision").get<double>(), m.at("recall").get<double>(), m.at("f1").get<double>()};
    r.counts.n_examples = j.value("n_examples", std::size_t{0});
    if (j.contains("provenance")) {
      r.dataset_hash = j["provenance"].value("dataset_hash", "");
      r.model_hash = j["provenance"].value("model_hash", "");
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("metrics report: ") + e.what());
  }
  return r;
}

std::string render_report(const MetricsReport& report, ReportFormat format) {
  if (format == ReportFormat::json) return report_to_json(report).dump(2) + "\n";
  std::string out = "Intent\tPrecision\tRecall\tF1\n";
  for (std::size_t l = 0; l < report.labels.size(); ++l) {
    const auto& m = report.labels[l];
    const auto& name = l < report.display_names.size() ? report.display_names[l] : m.label;
    out += name + "\t" + fixed2(m.precision) + "\t" + fixed2(m.recall) + "\t" + fixed2(m.f1) + "\n";
  }
  out += std::string(kMacroRow) + "\t" + fixed2(report.macro.precision) + "\t" + fixed2(report.macro.recall) +
         "\t" + fixed2(report.macro.f1) + "\n";
  return out;
}

std::string render_report(const MetricsReport& report, std::string_view format) {
  return render_report(report, parse_report_format(format));
}

MetricsReport parse_tsv_report(std::string_view tsv) {
  std::istringstream in{std::string(tsv)};
  std::string line;
  if (!std::getline(in, line) || line != "Intent\tPrecision\tRecall\tF1") {
    throw ValidationError("metrics TSV: missing or unexpected header");
  }
  MetricsReport r;
  bool saw_macro = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::istringstream ls(line);
    std::string col;
    while (std::getline(ls, col, '\t')) cols.push_back(col);
    if (cols.size() != 4) throw ValidationError("metrics TSV: expected 4 columns in '" + line + "'");
    double p, rc, f;
    try {
      p = std::stod(cols[1]);
      rc = std::stod(cols[2]);
      f = std::stod(cols[3]);
    } catch (const std::exception&) {
      throw ValidationError("metrics TSV: non-numeric value in '" + line + "'");
    }
    if (saw_macro) throw ValidationError("metrics TSV: rows after the macro row");
    if (cols[0] == kMacroRow) {
      r.macro = {p, rc, f};
      saw_macro = true;
    } else {
      r.labels.push_back({cols[0], p, rc, f});
      r.display_names.push_back(cols[0]);
    }
  }
  if (!saw_macro) throw ValidationError("metrics TSV: missing macro row");
  return r;
}

}  // namespace intentscan
