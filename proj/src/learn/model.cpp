#include "cogload/learn/model.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "cogload/hash.hpp"

namespace cogload::learn {

using Json = nlohmann::ordered_json;

std::string_view to_string(ModelKind k) { return k == ModelKind::kRf ? "rf" : "mlp"; }

std::optional<ModelKind> parse_model_kind(std::string_view s) {
  if (s == "rf") return ModelKind::kRf;
  if (s == "mlp") return ModelKind::kMlp;
  return std::nullopt;
}

std::string feature_order_hash(const std::vector<std::string>& order) {
  std::uint64_t h = fnv1a("feature_order");
  for (const auto& n : order) h = fnv1a(n + "\n", h);
  return hex64(h);
}

const ModelMeta& meta_of(const TrainedModel& m) {
  return std::visit([](const auto& v) -> const ModelMeta& { return v.meta; }, m);
}

ModelMeta& meta_of(TrainedModel& m) {
  return std::visit([](auto& v) -> ModelMeta& { return v.meta; }, m);
}

ModelKind kind_of(const TrainedModel& m) {
  return std::holds_alternative<RfModel>(m) ? ModelKind::kRf : ModelKind::kMlp;
}

namespace {

ModelMeta make_meta(const Dataset& data) {
  return {data.feature_order, data.profile, 1, feature_order_hash(data.feature_order), {}};
}

Eigen::VectorXd labels(const Dataset& d) {
  Eigen::VectorXd y(d.rows());
  for (Index i = 0; i < d.rows(); ++i) y(i) = d.y[static_cast<std::size_t>(i)];
  return y;
}

void descend(Mlp& net, const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lr, int epochs,
             std::vector<double>& history) {
  for (int e = 0; e < epochs; ++e) {
    const auto g = net.gradient(x, y);
    if (!std::isfinite(g.loss)) {
      throw Error("learn", "NON_FINITE_LOSS", "epoch " + std::to_string(e) + "; lower the learning rate");
    }
    history.push_back(g.loss);
    net.descend(g, lr);
  }
}

void check_compatible(const ModelMeta& meta, const Dataset& d) {
  if (d.profile != meta.profile) throw Error("learn", "PROFILE_MISMATCH");
  if (d.feature_order != meta.feature_order) throw Error("learn", "FEATURE_ORDER_MISMATCH");
}

}  // namespace

RfModel train_rf(const Dataset& data, const RfConfig& config) {
  data.require_trainable();
  RfModel m;
  m.meta = make_meta(data);
  m.config = config;
  m.forest = train_forest(data, config);
  m.training = data;
  return m;
}

MlpModel train_mlp(const Dataset& data, const MlpConfig& config) {
  data.require_trainable();
  if (config.epochs < 0 || !(config.learning_rate > 0.0)) throw Error("learn", "BAD_CONFIG", "MLP settings");
  MlpModel m;
  m.meta = make_meta(data);
  m.config = config;
  m.standardizer = Standardizer::fit(data.x);
  std::vector<int> sizes{static_cast<int>(data.cols())};
  sizes.insert(sizes.end(), config.hidden.begin(), config.hidden.end());
  sizes.push_back(1);
  m.net = Mlp(sizes);
  Rng rng(config.seed);
  m.net.initialize(rng);
  descend(m.net, m.standardizer.transform(data.x), labels(data), config.learning_rate, config.epochs,
          m.loss_history);
  return m;
}

TrainedModel train(const ModelSpec& spec, const Dataset& data) {
  if (spec.kind == ModelKind::kRf) return train_rf(data, spec.rf);
  return train_mlp(data, spec.mlp);
}

namespace {

void check_order(const ModelMeta& meta) {
  if (feature_order_hash(meta.feature_order) != meta.feature_order_hash) {
    throw Error("learn", "FEATURE_ORDER_MISMATCH", "feature order differs from the trained order");
  }
}

}  // namespace

std::vector<double> predict_scores(const TrainedModel& model, const Eigen::MatrixXd& x) {
  const ModelMeta& meta = meta_of(model);
  check_order(meta);
  if (x.cols() != static_cast<Index>(meta.feature_order.size())) {
    throw Error("learn", "FEATURE_ORDER_MISMATCH", "column count differs from the trained order");
  }
  std::vector<double> out(static_cast<std::size_t>(x.rows()));
  if (const auto* rf = std::get_if<RfModel>(&model)) {
    for (Index i = 0; i < x.rows(); ++i) out[static_cast<std::size_t>(i)] = rf->forest.score(x.row(i));
  } else {
    const auto& mlp = std::get<MlpModel>(model);
    const Eigen::VectorXd p = mlp.net.predict_proba(mlp.standardizer.transform(x));
    for (Index i = 0; i < x.rows(); ++i) out[static_cast<std::size_t>(i)] = p(i);
  }
  return out;
}

Prediction predict(const TrainedModel& model, const features::FeatureVector& vector) {
  const ModelMeta& meta = meta_of(model);
  check_order(meta);
  Eigen::MatrixXd row(1, static_cast<Index>(meta.feature_order.size()));
  for (std::size_t j = 0; j < meta.feature_order.size(); ++j) {
    auto v = vector.get(meta.feature_order[j]);
    if (!v) throw Error("learn", "MISSING_FEATURE", meta.feature_order[j]);
    row(0, static_cast<Index>(j)) = *v;
  }
  const double s = predict_scores(model, row).front();
  return {s >= 0.5 ? features::LoadLabel::kHigh : features::LoadLabel::kLow, s};
}

EvalReport evaluate(const TrainedModel& model, const Dataset& data) {
  check_compatible(meta_of(model), data);
  const auto scores = predict_scores(model, data.x);
  EvalReport r = summarize(data.y, scores, data.groups);
  r.folds.push_back({0, {}, r.window});
  return r;
}

EvalReport cross_validate(const ModelSpec& spec, const Dataset& data, int k, std::uint64_t seed) {
  data.require_trainable();
  const auto folds = grouped_kfold(data.groups, k, seed);
  std::vector<int> y;
  std::vector<double> scores;
  std::vector<std::string> groups;
  std::vector<FoldReport> reports;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const Dataset train_set = data.subset(folds[f].train);
    const Dataset test_set = data.subset(folds[f].test);
    const TrainedModel model = train(spec, train_set);
    const auto s = predict_scores(model, test_set.x);
    reports.push_back({static_cast<int>(f), folds[f].test_groups, score_predictions(test_set.y, s)});
    y.insert(y.end(), test_set.y.begin(), test_set.y.end());
    scores.insert(scores.end(), s.begin(), s.end());
    groups.insert(groups.end(), test_set.groups.begin(), test_set.groups.end());
  }
  EvalReport r = summarize(y, scores, groups);
  r.folds = std::move(reports);
  return r;
}

TrainedModel fine_tune(const TrainedModel& model, const Dataset& fresh) {
  check_compatible(meta_of(model), fresh);
  if (const auto* rf = std::get_if<RfModel>(&model)) {
    RfModel out = *rf;
    ++out.meta.version;
    if (fresh.rows() == 0) return out;
    out.training = Dataset::concat(rf->training, fresh);
    out.forest = train_forest(out.training, rf->config);
    return out;
  }
  MlpModel out = std::get<MlpModel>(model);
  ++out.meta.version;
  if (fresh.rows() == 0) return out;
  descend(out.net, out.standardizer.transform(fresh.x), labels(fresh), out.config.learning_rate * 0.1,
          kFineTuneEpochs, out.loss_history);
  return out;
}

// ---- persistence --------------------------------------------------------

namespace {

Json matrix_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json vector_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::MatrixXd matrix_from(const Json& j, Index cols) {
  Eigen::MatrixXd m(static_cast<Index>(j.size()), cols);
  for (Index r = 0; r < m.rows(); ++r) {
    const Json& row = j.at(static_cast<std::size_t>(r));
    if (static_cast<Index>(row.size()) != cols) throw Error("learn", "CORRUPT_FILE", "ragged matrix");
    for (Index c = 0; c < cols; ++c) m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
  }
  return m;
}

Eigen::VectorXd vector_from(const Json& j) {
  Eigen::VectorXd v(static_cast<Index>(j.size()));
  for (Index i = 0; i < v.size(); ++i) v(i) = j.at(static_cast<std::size_t>(i)).get<double>();
  return v;
}

Json meta_json(const ModelMeta& m) {
  Json j;
  j["feature_order"] = m.feature_order;
  j["feature_order_hash"] = m.feature_order_hash;
  j["profile"] = std::string(features::to_string(m.profile));
  j["version"] = m.version;
  j["config_hash"] = m.config_hash;
  return j;
}

ModelMeta meta_from(const Json& j) {
  ModelMeta m;
  m.feature_order = j.at("feature_order").get<std::vector<std::string>>();
  m.feature_order_hash = j.at("feature_order_hash").get<std::string>();
  auto p = features::parse_profile(j.at("profile").get<std::string>());
  if (!p) throw Error("learn", "CORRUPT_FILE", "unknown profile");
  m.profile = *p;
  m.version = j.at("version").get<int>();
  m.config_hash = j.at("config_hash").get<std::string>();
  return m;
}

Json dataset_json(const Dataset& d) {
  Json j;
  j["x"] = matrix_json(d.x);
  j["y"] = d.y;
  j["groups"] = d.groups;
  return j;
}

Json rf_json(const RfModel& m) {
  Json j;
  j["config"] = {{"n_trees", m.config.n_trees},
                 {"max_depth", m.config.max_depth},
                 {"min_samples_leaf", m.config.min_samples_leaf},
                 {"mtry", m.config.mtry},
                 {"seed", m.config.seed},
                 {"bootstrap", m.config.bootstrap}};
  j["n_features"] = m.forest.n_features;
  Json trees = Json::array();
  for (const auto& t : m.forest.trees) {
    Json nodes = Json::array();
    for (const auto& n : t.nodes) {
      nodes.push_back(Json::array({n.feature, n.threshold, n.left, n.right, n.count_low, n.count_high}));
    }
    trees.push_back(std::move(nodes));
  }
  j["trees"] = std::move(trees);
  j["training"] = dataset_json(m.training);
  return j;
}

Json mlp_json(const MlpModel& m) {
  Json j;
  j["config"] = {{"hidden", m.config.hidden},
                 {"learning_rate", m.config.learning_rate},
                 {"epochs", m.config.epochs},
                 {"seed", m.config.seed}};
  j["standardizer"] = {{"mean", vector_json(m.standardizer.mean)}, {"scale", vector_json(m.standardizer.scale)}};
  j["layer_sizes"] = m.net.layer_sizes();
  Json layers = Json::array();
  for (std::size_t l = 0; l < m.net.layer_count(); ++l) {
    layers.push_back({{"weight", matrix_json(m.net.weight(l))}, {"bias", vector_json(m.net.bias(l))}});
  }
  j["layers"] = std::move(layers);
  j["final_loss"] = m.loss_history.empty() ? Json(nullptr) : Json(m.loss_history.back());
  return j;
}

RfModel rf_from(const Json& j, ModelMeta meta) {
  RfModel m;
  m.meta = std::move(meta);
  const Json& c = j.at("config");
  m.config.n_trees = c.at("n_trees").get<int>();
  m.config.max_depth = c.at("max_depth").get<int>();
  m.config.min_samples_leaf = c.at("min_samples_leaf").get<int>();
  m.config.mtry = c.at("mtry").get<int>();
  m.config.seed = c.at("seed").get<std::uint64_t>();
  m.config.bootstrap = c.at("bootstrap").get<bool>();
  m.forest.n_features = j.at("n_features").get<Index>();
  for (const Json& tj : j.at("trees")) {
    DecisionTree t;
    for (const Json& nj : tj) {
      TreeNode n{nj.at(0).get<int>(), nj.at(1).get<double>(), nj.at(2).get<int>(),
                 nj.at(3).get<int>(), nj.at(4).get<int>(),    nj.at(5).get<int>()};
      t.nodes.push_back(n);
    }
    const auto count = static_cast<int>(t.nodes.size());
    if (count == 0) throw Error("learn", "CORRUPT_FILE", "empty tree");
    for (const auto& n : t.nodes) {
      if (!n.leaf() && (n.feature >= m.forest.n_features || n.left <= 0 || n.left >= count || n.right <= 0 ||
                        n.right >= count)) {
        throw Error("learn", "CORRUPT_FILE", "bad tree node");
      }
    }
    m.forest.trees.push_back(std::move(t));
  }
  const Json& d = j.at("training");
  m.training.feature_order = m.meta.feature_order;
  m.training.profile = m.meta.profile;
  m.training.x = matrix_from(d.at("x"), static_cast<Index>(m.meta.feature_order.size()));
  m.training.y = d.at("y").get<std::vector<int>>();
  m.training.groups = d.at("groups").get<std::vector<std::string>>();
  if (static_cast<Index>(m.training.y.size()) != m.training.rows() ||
      m.training.groups.size() != m.training.y.size()) {
    throw Error("learn", "CORRUPT_FILE", "training data shape");
  }
  return m;
}

MlpModel mlp_from(const Json& j, ModelMeta meta) {
  MlpModel m;
  m.meta = std::move(meta);
  const Json& c = j.at("config");
  m.config.hidden = c.at("hidden").get<std::vector<int>>();
  m.config.learning_rate = c.at("learning_rate").get<double>();
  m.config.epochs = c.at("epochs").get<int>();
  m.config.seed = c.at("seed").get<std::uint64_t>();
  m.standardizer.mean = vector_from(j.at("standardizer").at("mean"));
  m.standardizer.scale = vector_from(j.at("standardizer").at("scale"));
  m.net = Mlp(j.at("layer_sizes").get<std::vector<int>>());
  const Json& layers = j.at("layers");
  if (layers.size() != m.net.layer_count()) throw Error("learn", "CORRUPT_FILE", "layer count");
  for (std::size_t l = 0; l < m.net.layer_count(); ++l) {
    const Eigen::MatrixXd w = matrix_from(layers.at(l).at("weight"), m.net.weight(l).cols());
    const Eigen::VectorXd b = vector_from(layers.at(l).at("bias"));
    if (w.rows() != m.net.weight(l).rows() || b.size() != m.net.bias(l).size()) {
      throw Error("learn", "CORRUPT_FILE", "layer shape");
    }
    m.net.weight(l) = w;
    m.net.bias(l) = b;
  }
  if (m.standardizer.mean.size() != m.net.weight(0).cols() ||
      m.standardizer.scale.size() != m.standardizer.mean.size()) {
    throw Error("learn", "CORRUPT_FILE", "standardizer shape");
  }
  const Json& fl = j.at("final_loss");
  if (!fl.is_null()) m.loss_history.push_back(fl.get<double>());
  return m;
}

}  // namespace

void save_model(std::ostream& out, const TrainedModel& model) {
  Json j;
  j["format"] = "cogload-model";
  j["format_version"] = kModelFormatVersion;
  j["kind"] = std::string(to_string(kind_of(model)));
  j["meta"] = meta_json(meta_of(model));
  if (const auto* rf = std::get_if<RfModel>(&model)) {
    j["rf"] = rf_json(*rf);
  } else {
    j["mlp"] = mlp_json(std::get<MlpModel>(model));
  }
  out << j.dump() << "\n";
}

void save_model(const std::string& path, const TrainedModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("learn", "IO_ERROR", "cannot write " + path);
  save_model(out, model);
}

TrainedModel load_model(std::istream& in) {
  std::stringstream buf;
  buf << in.rdbuf();
  const Json j = Json::parse(buf.str(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error("learn", "CORRUPT_FILE", "not a JSON object");
  try {
    if (j.at("format").get<std::string>() != "cogload-model") throw Error("learn", "CORRUPT_FILE", "not a model");
    const int v = j.at("format_version").get<int>();
    if (v != kModelFormatVersion) {
      throw Error("learn", "VERSION_MISMATCH", "format_version " + std::to_string(v));
    }
    ModelMeta meta = meta_from(j.at("meta"));
    auto kind = parse_model_kind(j.at("kind").get<std::string>());
    if (!kind) throw Error("learn", "CORRUPT_FILE", "unknown model kind");
    if (*kind == ModelKind::kRf) return rf_from(j.at("rf"), std::move(meta));
    return mlp_from(j.at("mlp"), std::move(meta));
  } catch (const nlohmann::json::exception& e) {
    throw Error("learn", "CORRUPT_FILE", e.what());
  }
}

TrainedModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("learn", "IO_ERROR", "cannot open " + path);
  return load_model(in);
}

}  // namespace cogload::learn
