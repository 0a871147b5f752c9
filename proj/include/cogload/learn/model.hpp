#pragma once

// Trained classifiers, evaluation, fine-tuning and the model file.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cogload/features.hpp"
#include "cogload/learn/dataset.hpp"
#include "cogload/learn/forest.hpp"
#include "cogload/learn/metrics.hpp"
#include "cogload/learn/mlp.hpp"

namespace cogload::learn {

enum class ModelKind { kRf, kMlp };
std::string_view to_string(ModelKind);
std::optional<ModelKind> parse_model_kind(std::string_view);  // "rf" | "mlp"

struct MlpConfig {
  std::vector<int> hidden{16, 8};
  double learning_rate = 0.01;
  int epochs = 500;
  std::uint64_t seed = 0;
};

struct ModelMeta {
  std::vector<std::string> feature_order;
  features::Profile profile = features::Profile::kRaw;
  int version = 1;
  std::string feature_order_hash;  // fixed at training time
  std::string config_hash;         // provenance of the run that produced the model
};

std::string feature_order_hash(const std::vector<std::string>& order);

struct RfModel {
  ModelMeta meta;
  RfConfig config;
  RandomForest forest;
  Dataset training;  // kept so fine-tuning can retrain on the union
};

struct MlpModel {
  ModelMeta meta;
  MlpConfig config;
  Standardizer standardizer;
  Mlp net;
  std::vector<double> loss_history;
};

using TrainedModel = std::variant<RfModel, MlpModel>;

const ModelMeta& meta_of(const TrainedModel&);
ModelMeta& meta_of(TrainedModel&);
ModelKind kind_of(const TrainedModel&);

struct ModelSpec {
  ModelKind kind = ModelKind::kRf;
  RfConfig rf;
  MlpConfig mlp;
};

RfModel train_rf(const Dataset& data, const RfConfig& config);

/// Fits the standardizer on `data`, then runs full-batch gradient descent.
/// Throws learn.NON_FINITE_LOSS on divergence.
MlpModel train_mlp(const Dataset& data, const MlpConfig& config);

TrainedModel train(const ModelSpec& spec, const Dataset& data);

struct Prediction {
  features::LoadLabel label = features::LoadLabel::kLow;
  double score = 0.0;
};

/// Label is HIGH iff score >= 0.5. Throws learn.MISSING_FEATURE and
/// learn.FEATURE_ORDER_MISMATCH.
Prediction predict(const TrainedModel& model, const features::FeatureVector& vector);

/// Scores for raw (unstandardized) rows laid out in the model's feature order.
std::vector<double> predict_scores(const TrainedModel& model, const Eigen::MatrixXd& x);

EvalReport evaluate(const TrainedModel& model, const Dataset& data);

/// Participant-grouped k-fold CV. Each fold trains a fresh model (and, for
/// the MLP, a fresh standardizer) on the training groups only.
EvalReport cross_validate(const ModelSpec& spec, const Dataset& data, int k, std::uint64_t seed);

/// MLP: 50 further epochs on `fresh` at a tenth of the learning rate,
/// standardizer unchanged. RF: retrain on the union with the original seed.
/// Both bump the version. Throws learn.PROFILE_MISMATCH and
/// learn.FEATURE_ORDER_MISMATCH.
TrainedModel fine_tune(const TrainedModel& model, const Dataset& fresh);

inline constexpr int kModelFormatVersion = 1;
inline constexpr int kFineTuneEpochs = 50;

/// Self-describing JSON. Load throws learn.VERSION_MISMATCH and
/// learn.CORRUPT_FILE.
void save_model(std::ostream&, const TrainedModel&);
void save_model(const std::string& path, const TrainedModel&);
TrainedModel load_model(std::istream&);
TrainedModel load_model(const std::string& path);

}  // namespace cogload::learn
