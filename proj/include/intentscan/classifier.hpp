#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "intentscan/corpus.hpp"
#include "intentscan/dataset.hpp"
#include "intentscan/features.hpp"

namespace intentscan {

struct TrainConfig {
  double learning_rate = 0.1;
  double l2_lambda = 1e-4;
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  // Epochs without validation macro-F1 improvement before stopping; 0 disables.
  std::size_t early_stop_patience = 5;
  std::size_t min_df = 1;
  std::size_t max_ngram = 2;
  // Worker threads for per-label updates; 0 picks hardware concurrency.
  std::size_t threads = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

// One-vs-rest logistic model. Row l of weights scores registry label l.
struct LinearMultilabelModel {
  LabelRegistry registry;
  Vocabulary vocabulary;  // empty when an encoder backend supplies features
  std::shared_ptr<const EncoderBackend> encoder;
  std::vector<std::vector<double>> weights;
  std::vector<double> biases;
  std::vector<double> thresholds;
  // Set for labels without both positive and negative training examples;
  // such labels always predict this probability.
  std::vector<std::optional<double>> constant_probability;

  static LinearMultilabelModel zeros(LabelRegistry registry, Vocabulary vocabulary);
  static LinearMultilabelModel zeros(LabelRegistry registry,
                                     std::shared_ptr<const EncoderBackend> encoder);

  std::size_t n_labels() const { return registry.size(); }
  std::size_t n_features() const;
  FeatureVector features(std::string_view text) const;
  // Throws ValidationError on shape mismatch or non-finite parameters.
  void validate() const;
};

struct TrainingExample {
  FeatureVector features;
  LabelVector labels;
};

struct LossGradient {
  double loss = 0.0;
  std::vector<std::vector<double>> weight_grad;
  std::vector<double> bias_grad;
};

// Mean binary cross-entropy over batch and labels of sigmoid(W_l.x + b_l),
// plus (l2_lambda / 2) * sum ||W_l||^2, with its exact gradient.
LossGradient loss_and_gradient(const LinearMultilabelModel& model,
                               std::span<const TrainingExample> batch, double l2_lambda);

struct TrainReport {
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
  std::optional<double> best_validation_macro_f1;
  std::vector<std::string> degenerate_labels;
  nlohmann::json to_json() const;
};

struct TrainResult {
  LinearMultilabelModel model;
  TrainReport report;
};

// Mini-batch gradient descent, one independent logistic regression per
// label. Each label minimizes its batch-mean cross-entropy plus
// (l2_lambda / 2) ||W_l||^2. With a validation set, training stops after
// early_stop_patience epochs without macro-F1 improvement and keeps the
// best epoch's parameters.
TrainResult train_one_vs_rest(const Dataset& train, const Dataset* validation,
                              const TrainConfig& config,
                              std::shared_ptr<const EncoderBackend> encoder = nullptr);

std::vector<double> predict_probs(const LinearMultilabelModel& model, std::string_view text);
LabelVector predict_label_vector(const LinearMultilabelModel& model, std::string_view text);
// Label ids with probability >= threshold, in registry order.
std::vector<std::string> predict_labels(const LinearMultilabelModel& model, std::string_view text);

// Per-label threshold maximizing F1 on the given dataset. Optional step;
// training leaves every threshold at 0.5.
void tune_thresholds(LinearMultilabelModel& model, const Dataset& validation);

inline constexpr int kModelFormatVersion = 1;

nlohmann::json model_to_json(const LinearMultilabelModel& model);
// encoder must be supplied when the artifact was trained with one.
LinearMultilabelModel model_from_json(const nlohmann::json& j,
                                      std::shared_ptr<const EncoderBackend> encoder = nullptr);
std::string serialize_model(const LinearMultilabelModel& model);
void save_model(const LinearMultilabelModel& model, const std::filesystem::path& path);
LinearMultilabelModel load_model(const std::filesystem::path& path,
                                 std::shared_ptr<const EncoderBackend> encoder = nullptr);

}  // namespace intentscan
