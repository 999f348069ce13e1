#include "intentscan/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "intentscan/errors.hpp"
#include "intentscan/hash.hpp"
#include "intentscan/io.hpp"
#include "intentscan/metrics.hpp"
#include "intentscan/rng.hpp"

namespace intentscan {

using nlohmann::json;

namespace {

constexpr std::uint64_t kEpochStreamBase = 100;

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// -[y log s(z) + (1 - y) log(1 - s(z))] without overflow.
double bce_from_logit(double z, double y) {
  return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))) - y * z;
}

double dot(const std::vector<double>& w, const FeatureVector& x) {
  double s = 0.0;
  for (std::size_t k = 0; k < x.indices.size(); ++k) s += w[x.indices[k]] * x.values[k];
  return s;
}

std::size_t worker_count(const TrainConfig& config, std::size_t jobs) {
  std::size_t n = config.threads;
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, std::min(n, jobs));
}

// Runs fn(label) for every label in `labels`; each label is touched by one
// worker only, so results do not depend on scheduling.
template <typename Fn>
void for_each_label(const std::vector<std::size_t>& labels, std::size_t workers, Fn fn) {
  if (workers <= 1) {
    for (auto l : labels) fn(l);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < labels.size(); i += workers) fn(labels[i]);
    });
  }
}

double get_number(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) throw ValidationError(std::string("train config: '") + key + "' must be a number");
  return j[key].get<double>();
}

std::size_t get_count(const json& j, const char* key, std::size_t fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_integer() || j[key].get<long long>() < 0) {
    throw ValidationError(std::string("train config: '") + key + "' must be a non-negative integer");
  }
  return j[key].get<std::size_t>();
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ValidationError("learning_rate must be positive");
  }
  if (!(l2_lambda >= 0.0) || !std::isfinite(l2_lambda)) throw ValidationError("l2_lambda must be >= 0");
  if (epochs < 1) throw ValidationError("epochs must be >= 1");
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (min_df < 1) throw ValidationError("min_df must be >= 1");
  if (max_ngram < 1) throw ValidationError("max_ngram must be >= 1");
}

json TrainConfig::to_json() const {
  return {{"learning_rate", learning_rate}, {"l2_lambda", l2_lambda},
          {"epochs", epochs},               {"batch_size", batch_size},
          {"seed", seed},                   {"early_stop_patience", early_stop_patience},
          {"min_df", min_df},               {"max_ngram", max_ngram},
          {"threads", threads}};
}

TrainConfig TrainConfig::from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("train config: expected a JSON object");
  static const std::vector<std::string> kKnown = {"learning_rate", "l2_lambda", "epochs",
                                                  "batch_size",    "seed",      "early_stop_patience",
                                                  "min_df",        "max_ngram", "threads"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(kKnown.begin(), kKnown.end(), key) == kKnown.end()) {
      throw ValidationError("train config: unknown field '" + key + "'");
    }
  }
  TrainConfig c;
  c.learning_rate = get_number(j, "learning_rate", c.learning_rate);
  c.l2_lambda = get_number(j, "l2_lambda", c.l2_lambda);
  c.epochs = get_count(j, "epochs", c.epochs);
  c.batch_size = get_count(j, "batch_size", c.batch_size);
  c.seed = get_count(j, "seed", c.seed);
  c.early_stop_patience = get_count(j, "early_stop_patience", c.early_stop_patience);
  c.min_df = get_count(j, "min_df", c.min_df);
  c.max_ngram = get_count(j, "max_ngram", c.max_ngram);
  c.threads = get_count(j, "threads", c.threads);
  c.validate();
  return c;
}

LinearMultilabelModel LinearMultilabelModel::zeros(LabelRegistry registry, Vocabulary vocabulary) {
  LinearMultilabelModel m;
  const std::size_t L = registry.size();
  const std::size_t F = vocabulary.size();
  m.registry = std::move(registry);
  m.vocabulary = std::move(vocabulary);
  m.weights.assign(L, std::vector<double>(F, 0.0));
  m.biases.assign(L, 0.0);
  m.thresholds.assign(L, 0.5);
  m.constant_probability.assign(L, std::nullopt);
  return m;
}

LinearMultilabelModel LinearMultilabelModel::zeros(LabelRegistry registry,
                                                   std::shared_ptr<const EncoderBackend> encoder) {
  if (!encoder) throw ValidationError("encoder backend is null");
  LinearMultilabelModel m = zeros(std::move(registry), Vocabulary{});
  for (auto& row : m.weights) row.assign(encoder->dimension(), 0.0);
  m.encoder = std::move(encoder);
  return m;
}

std::size_t LinearMultilabelModel::n_features() const {
  return encoder ? encoder->dimension() : vocabulary.size();
}

FeatureVector LinearMultilabelModel::features(std::string_view text) const {
  return encoder ? from_dense(encoder->encode(text)) : featurize(text, vocabulary);
}

void LinearMultilabelModel::validate() const {
  const std::size_t L = registry.size();
  if (L == 0) throw ValidationError("model has an empty registry");
  if (weights.size() != L || biases.size() != L || thresholds.size() != L ||
      constant_probability.size() != L) {
    throw ValidationError("model parameter shapes do not match the registry size");
  }
  const std::size_t F = n_features();
  for (std::size_t l = 0; l < L; ++l) {
    if (weights[l].size() != F) throw ValidationError("model weight row " + std::to_string(l) + " has wrong length");
    if (!std::all_of(weights[l].begin(), weights[l].end(), [](double w) { return std::isfinite(w); }) ||
        !std::isfinite(biases[l])) {
      throw ValidationError("model label " + std::to_string(l) + " has non-finite parameters");
    }
    if (!(thresholds[l] >= 0.0 && thresholds[l] <= 1.0)) {
      throw ValidationError("model label " + std::to_string(l) + " threshold outside [0, 1]");
    }
    if (constant_probability[l] && !(*constant_probability[l] >= 0.0 && *constant_probability[l] <= 1.0)) {
      throw ValidationError("model label " + std::to_string(l) + " constant probability outside [0, 1]");
    }
  }
}

LossGradient loss_and_gradient(const LinearMultilabelModel& model, std::span<const TrainingExample> batch,
                               double l2_lambda) {
  if (batch.empty()) throw ValidationError("loss_and_gradient: empty batch");
  const std::size_t L = model.n_labels();
  const std::size_t F = model.n_features();
  const double scale = 1.0 / (static_cast<double>(batch.size()) * static_cast<double>(L));

  LossGradient out;
  out.weight_grad.assign(L, std::vector<double>(F, 0.0));
  out.bias_grad.assign(L, 0.0);
  for (std::size_t l = 0; l < L; ++l) {
    const auto& w = model.weights[l];
    double label_loss = 0.0;
    for (const auto& ex : batch) {
      if (ex.labels.size() != L) throw ValidationError("loss_and_gradient: label vector length mismatch");
      const double y = ex.labels[l];
      const double z = dot(w, ex.features) + model.biases[l];
      label_loss += bce_from_logit(z, y);
      const double r = (sigmoid(z) - y) * scale;
      for (std::size_t k = 0; k < ex.features.indices.size(); ++k) {
        out.weight_grad[l][ex.features.indices[k]] += r * ex.features.values[k];
      }
      out.bias_grad[l] += r;
    }
    double sq = 0.0;
    for (std::size_t f = 0; f < F; ++f) {
      sq += w[f] * w[f];
      out.weight_grad[l][f] += l2_lambda * w[f];
    }
    const double contribution = label_loss * scale + 0.5 * l2_lambda * sq;
    if (!std::isfinite(contribution)) {
      throw Error("non-finite loss for label index " + std::to_string(l));
    }
    out.loss += contribution;
  }
  return out;
}

json TrainReport::to_json() const {
  json j = {{"epochs_run", epochs_run}, {"best_epoch", best_epoch}, {"degenerate_labels", degenerate_labels}};
  j["best_validation_macro_f1"] = best_validation_macro_f1 ? json(*best_validation_macro_f1) : json(nullptr);
  return j;
}

TrainResult train_one_vs_rest(const Dataset& train, const Dataset* validation, const TrainConfig& config,
                              std::shared_ptr<const EncoderBackend> encoder) {
  config.validate();
  if (train.examples.empty()) throw ValidationError("training set is empty");
  if (train.registry.empty()) throw ValidationError("training set has an empty registry");
  if (validation && validation->registry.ids() != train.registry.ids()) {
    throw ValidationError("training and validation sets use different label registries");
  }

  LinearMultilabelModel model =
      encoder ? LinearMultilabelModel::zeros(train.registry, std::move(encoder))
              : LinearMultilabelModel::zeros(train.registry,
                                             build_vocabulary(train, config.min_df, config.max_ngram));
  const std::size_t L = model.n_labels();
  const std::size_t N = train.examples.size();

  std::vector<FeatureVector> X;
  X.reserve(N);
  for (const auto& ex : train.examples) X.push_back(model.features(ex.sentence.text));

  TrainResult result;
  std::vector<std::size_t> active;
  for (std::size_t l = 0; l < L; ++l) {
    std::size_t pos = 0;
    for (const auto& ex : train.examples) pos += ex.labels[l];
    if (pos == 0 || pos == N) {
      model.constant_probability[l] = static_cast<double>(pos) / static_cast<double>(N);
      result.report.degenerate_labels.push_back(model.registry.at(l).id);
    } else {
      active.push_back(l);
    }
  }
  if (active.empty()) {
    throw ValidationError("every label is degenerate (no positive or no negative training examples)");
  }

  const std::size_t workers = worker_count(config, active.size());
  const double lr = config.learning_rate;
  const double decay = 1.0 - lr * config.l2_lambda;
  std::vector<std::size_t> order(N);
  std::iota(order.begin(), order.end(), 0);

  auto best_weights = model.weights;
  auto best_biases = model.biases;
  double best_f1 = -1.0;
  std::size_t stall = 0;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    Rng rng(derive_seed(config.seed, kEpochStreamBase + epoch));
    rng.shuffle(std::span(order));

    for_each_label(active, workers, [&](std::size_t l) {
      auto& w = model.weights[l];
      double& b = model.biases[l];
      std::vector<double> residual;
      for (std::size_t start = 0; start < N; start += config.batch_size) {
        const std::size_t stop = std::min(N, start + config.batch_size);
        const double inv_b = 1.0 / static_cast<double>(stop - start);
        residual.clear();
        for (std::size_t p = start; p < stop; ++p) {
          const std::size_t i = order[p];
          residual.push_back(sigmoid(dot(w, X[i]) + b) - train.examples[i].labels[l]);
        }
        if (decay != 1.0) {
          for (auto& v : w) v *= decay;
        }
        double bias_step = 0.0;
        for (std::size_t p = start; p < stop; ++p) {
          const auto& x = X[order[p]];
          const double r = residual[p - start] * inv_b;
          for (std::size_t k = 0; k < x.indices.size(); ++k) w[x.indices[k]] -= lr * r * x.values[k];
          bias_step += r;
        }
        b -= lr * bias_step;
      }
    });
    result.report.epochs_run = epoch + 1;

    if (validation) {
      const double f1 = evaluate(model, *validation).macro.f1;
      if (f1 > best_f1) {
        best_f1 = f1;
        best_weights = model.weights;
        best_biases = model.biases;
        result.report.best_epoch = epoch + 1;
        stall = 0;
      } else if (config.early_stop_patience > 0 && ++stall >= config.early_stop_patience) {
        break;
      }
    }
  }

  if (validation) {
    model.weights = std::move(best_weights);
    model.biases = std::move(best_biases);
    result.report.best_validation_macro_f1 = best_f1;
  } else {
    result.report.best_epoch = result.report.epochs_run;
  }
  model.validate();
  result.model = std::move(model);
  return result;
}

std::vector<double> predict_probs(const LinearMultilabelModel& model, std::string_view text) {
  const FeatureVector x = model.features(text);
  std::vector<double> probs(model.n_labels());
  for (std::size_t l = 0; l < probs.size(); ++l) {
    probs[l] = model.constant_probability[l] ? *model.constant_probability[l]
                                             : sigmoid(dot(model.weights[l], x) + model.biases[l]);
  }
  return probs;
}

LabelVector predict_label_vector(const LinearMultilabelModel& model, std::string_view text) {
  const auto probs = predict_probs(model, text);
  LabelVector out(probs.size(), 0);
  for (std::size_t l = 0; l < probs.size(); ++l) out[l] = probs[l] >= model.thresholds[l] ? 1 : 0;
  return out;
}

std::vector<std::string> predict_labels(const LinearMultilabelModel& model, std::string_view text) {
  const auto v = predict_label_vector(model, text);
  std::vector<std::string> out;
  for (std::size_t l = 0; l < v.size(); ++l) {
    if (v[l]) out.push_back(model.registry.at(l).id);
  }
  return out;
}

void tune_thresholds(LinearMultilabelModel& model, const Dataset& validation) {
  if (validation.registry.ids() != model.registry.ids()) {
    throw ValidationError("tune_thresholds: validation registry differs from the model's");
  }
  const std::size_t L = model.n_labels();
  std::vector<std::vector<double>> probs;
  probs.reserve(validation.examples.size());
  for (const auto& ex : validation.examples) probs.push_back(predict_probs(model, ex.sentence.text));

  for (std::size_t l = 0; l < L; ++l) {
    if (model.constant_probability[l]) continue;
    std::vector<double> candidates{0.5};
    for (const auto& p : probs) candidates.push_back(p[l]);
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    double best_tau = model.thresholds[l];
    double best_f1 = -1.0;
    for (double tau : candidates) {
      LabelConfusion c;
      for (std::size_t i = 0; i < probs.size(); ++i) {
        const bool pred = probs[i][l] >= tau;
        const bool gold = validation.examples[i].labels[l] != 0;
        if (pred && gold) ++c.tp;
        else if (pred) ++c.fp;
        else if (gold) ++c.fn;
        else ++c.tn;
      }
      const double f1 = precision_recall_f1(c).f1;
      if (f1 > best_f1 || (f1 == best_f1 && std::abs(tau - 0.5) < std::abs(best_tau - 0.5))) {
        best_f1 = f1;
        best_tau = tau;
      }
    }
    model.thresholds[l] = best_tau;
  }
}

json model_to_json(const LinearMultilabelModel& model) {
  model.validate();
  json j;
  j["format_version"] = kModelFormatVersion;
  if (model.encoder) {
    j["encoder"] = {{"kind", "external"}, {"name", model.encoder->name()}, {"dimension", model.encoder->dimension()}};
  } else {
    j["encoder"] = {{"kind", "tfidf"}};
    j["vocabulary"] = model.vocabulary.to_json();
  }
  j["registry"] = model.registry.to_json();
  j["weights"] = model.weights;
  j["biases"] = model.biases;
  j["thresholds"] = model.thresholds;
  json constant = json::array();
  for (const auto& c : model.constant_probability) constant.push_back(c ? json(*c) : json(nullptr));
  j["constant_probability"] = std::move(constant);
  return j;
}

LinearMultilabelModel model_from_json(const json& input, std::shared_ptr<const EncoderBackend> encoder) {
  if (!input.is_object() || !input.contains("format_version") || !input["format_version"].is_number_integer()) {
    throw ValidationError("model artifact has no integer format_version");
  }
  const auto version = input["format_version"].get<long long>();
  if (version != kModelFormatVersion) {
    throw VersionError("model format version " + std::to_string(version) + " is not supported (expected " +
                       std::to_string(kModelFormatVersion) + ")");
  }
  if (!input.contains("checksum") || !input["checksum"].is_string()) {
    throw ChecksumError("model artifact has no checksum");
  }
  json payload = input;
  const auto stored = payload["checksum"].get<std::string>();
  payload.erase("checksum");
  if (sha256_hex(payload.dump()) != stored) throw ChecksumError("model checksum mismatch; artifact is corrupted");

  LinearMultilabelModel m;
  try {
    m.registry = LabelRegistry::from_json(payload.at("registry"));
    const auto& enc = payload.at("encoder");
    const auto kind = enc.at("kind").get<std::string>();
    if (kind == "tfidf") {
      m.vocabulary = Vocabulary::from_json(payload.at("vocabulary"));
    } else if (kind == "external") {
      const auto name = enc.at("name").get<std::string>();
      if (!encoder || encoder->name() != name || encoder->dimension() != enc.at("dimension").get<std::size_t>()) {
        throw ValidationError("model was trained with encoder '" + name + "', which was not supplied");
      }
      m.encoder = std::move(encoder);
    } else {
      throw ValidationError("unknown encoder kind '" + kind + "'");
    }
    m.weights = payload.at("weights").get<std::vector<std::vector<double>>>();
    m.biases = payload.at("biases").get<std::vector<double>>();
    m.thresholds = payload.at("thresholds").get<std::vector<double>>();
    for (const auto& c : payload.at("constant_probability")) {
      m.constant_probability.push_back(c.is_null() ? std::nullopt : std::optional<double>(c.get<double>()));
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("model artifact: ") + e.what());
  }
  m.validate();
  return m;
}

std::string serialize_model(const LinearMultilabelModel& model) {
  json j = model_to_json(model);
  j["checksum"] = sha256_hex(j.dump());
  return j.dump() + "\n";
}

void save_model(const LinearMultilabelModel& model, const std::filesystem::path& path) {
  io::write_file(path, serialize_model(model));
}

LinearMultilabelModel load_model(const std::filesystem::path& path, std::shared_ptr<const EncoderBackend> encoder) {
  const auto text = io::read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ChecksumError(path.string() + ": model artifact is not valid JSON: " + e.what());
  }
  try {
    return model_from_json(j, std::move(encoder));
  } catch (const VersionError& e) {
    throw VersionError(path.string() + ": " + e.what());
  } catch (const ChecksumError& e) {
    throw ChecksumError(path.string() + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

}  // namespace intentscan
