#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cogload/learn/model.hpp"
#include "oracles/gini.hpp"
#include "support.hpp"

using namespace cogload;
using namespace cogload::learn;

namespace {

// Two Gaussian blobs in d dimensions; HIGH rows shifted by `gap` along every axis.
Dataset blobs(int n, int d, double gap, std::uint64_t seed, int participants = 6, double offset = 0.0) {
  Rng rng(seed);
  Dataset data;
  data.x.resize(n, d);
  for (int i = 0; i < n; ++i) {
    const int label = i % 2;
    data.y.push_back(label);
    data.groups.push_back("P" + std::to_string(i % participants));
    for (int j = 0; j < d; ++j) data.x(i, j) = rng.normal() + (label ? gap : 0.0) + offset;
  }
  for (int j = 0; j < d; ++j) data.feature_order.push_back(features::feature_registry()[j].name);
  return data;
}

Dataset one_column(const std::vector<double>& x, const std::vector<int>& y) {
  Dataset d;
  d.x.resize(static_cast<Index>(x.size()), 1);
  for (std::size_t i = 0; i < x.size(); ++i) d.x(static_cast<Index>(i), 0) = x[i];
  d.y = y;
  d.groups.assign(x.size(), "P01");
  d.feature_order = {"pupil_dilation_mean"};
  return d;
}

double accuracy_on(const TrainedModel& m, const Dataset& d) {
  const auto s = predict_scores(m, d.x);
  int right = 0;
  for (std::size_t i = 0; i < s.size(); ++i) right += (s[i] >= 0.5) == (d.y[i] == kHigh);
  return static_cast<double>(right) / static_cast<double>(s.size());
}

features::FeatureVector vector_from(const Dataset& d, Index row) {
  features::FeatureVector v;
  for (Index j = 0; j < d.cols(); ++j) v.values[d.feature_order[static_cast<std::size_t>(j)]] = d.x(row, j);
  return v;
}

}  // namespace

TEST(Metrics, ConfusionExample) {
  const auto m = metrics_from_confusion({15, 3, 1, 9});
  EXPECT_NEAR(*m.precision, 0.8333, 5e-5);
  EXPECT_NEAR(*m.recall, 0.9375, 1e-12);
  EXPECT_NEAR(*m.f1, 0.8824, 5e-5);
  EXPECT_NEAR(*m.accuracy, 0.8571, 5e-5);
  // Precision 0.84 and recall 0.94 give an F1 of about 0.887.
  EXPECT_NEAR(2 * 0.84 * 0.94 / (0.84 + 0.94), 0.887, 5e-4);
}

TEST(Metrics, UndefinedStaysMissing) {
  const auto m = metrics_from_confusion({0, 0, 0, 5});
  EXPECT_FALSE(m.precision);
  EXPECT_FALSE(m.recall);
  EXPECT_FALSE(m.f1);
  EXPECT_DOUBLE_EQ(*m.accuracy, 1.0);
  EXPECT_CODE(require_metric(m.precision, "precision"), "learn.UNDEFINED_METRIC");
}

TEST(Metrics, AucExamples) {
  const std::vector<int> y{1, 1, 0, 0};
  const std::vector<double> s{0.9, 0.4, 0.6, 0.2};
  EXPECT_EQ(*auc_pairwise(y, s), 0.75);
  EXPECT_EQ(*auc_trapezoid(y, s), 0.75);
  const std::vector<double> perfect{0.9, 0.8, 0.1, 0.2};
  EXPECT_EQ(*auc_pairwise(y, perfect), 1.0);
  EXPECT_FALSE(auc_pairwise(std::vector<int>{1, 1}, std::vector<double>{0.2, 0.3}));
}

TEST(Metrics, TrapezoidEqualsPairwise) {
  Rng rng(10);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + rng.below(200);
    std::vector<int> y(n);
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = rng.bernoulli(0.5);
      // Coarse scores force plenty of ties.
      s[i] = static_cast<double>(rng.below(rng.bernoulli(0.5) ? 5 : 1000)) / 10.0;
    }
    const auto a = auc_pairwise(y, s), b = auc_trapezoid(y, s);
    ASSERT_EQ(a.has_value(), b.has_value());
    if (a) EXPECT_NEAR(*a, *b, 1e-12);
    // Brute-force pair enumeration.
    double wins = 0, pairs = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (y[i] != 1 || y[j] != 0) continue;
        pairs += 1;
        wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
      }
    }
    if (a) EXPECT_NEAR(*a, wins / pairs, 1e-12);
  }
}

TEST(Metrics, ScalarsRecomputeFromConfusion) {
  Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> y(50);
    std::vector<double> s(50);
    for (int i = 0; i < 50; ++i) {
      y[i] = rng.bernoulli(0.5);
      s[i] = rng.uniform();
    }
    const auto m = score_predictions(y, s);
    const auto again = metrics_from_confusion(m.confusion);
    EXPECT_EQ(m.accuracy, again.accuracy);
    EXPECT_EQ(m.precision, again.precision);
    EXPECT_EQ(m.recall, again.recall);
    EXPECT_EQ(m.f1, again.f1);
    EXPECT_EQ(m.confusion, confusion_at(y, s));
  }
}

TEST(Folds, NineteenIntoThree) {
  std::vector<std::string> groups;
  for (int p = 0; p < 19; ++p) {
    for (int w = 0; w < 3; ++w) groups.push_back("P" + std::to_string(p));
  }
  const auto folds = grouped_kfold(groups, 3, 7);
  ASSERT_EQ(folds.size(), 3u);
  std::vector<std::size_t> sizes;
  std::multiset<std::string> tested;
  for (const auto& f : folds) {
    sizes.push_back(f.test_groups.size());
    tested.insert(f.test_groups.begin(), f.test_groups.end());
    std::set<std::string> train_groups, test_groups;
    for (auto i : f.train) train_groups.insert(groups[static_cast<std::size_t>(i)]);
    for (auto i : f.test) test_groups.insert(groups[static_cast<std::size_t>(i)]);
    for (const auto& g : test_groups) EXPECT_EQ(train_groups.count(g), 0u);
    EXPECT_EQ(f.train.size() + f.test.size(), groups.size());
  }
  EXPECT_EQ(sizes, (std::vector<std::size_t>{7, 6, 6}));
  EXPECT_EQ(tested.size(), 19u);
  EXPECT_EQ(std::set<std::string>(tested.begin(), tested.end()).size(), 19u);
}

TEST(Folds, EdgeCases) {
  const std::vector<std::string> three{"a", "b", "c"};
  for (const auto& f : grouped_kfold(three, 3, 1)) EXPECT_EQ(f.test.size(), 1u);
  EXPECT_CODE(grouped_kfold(std::vector<std::string>{"a", "b"}, 3, 1), "learn.TOO_FEW_GROUPS");
}

TEST(Forest, StumpFindsZeroThreshold) {
  Rng rng(4);
  std::vector<double> x;
  std::vector<int> y;
  for (int i = 0; i < 200; ++i) {
    double v = rng.uniform(0.01, 5.0) * (i % 2 ? 1.0 : -1.0);
    x.push_back(v);
    y.push_back(v < 0 ? kLow : kHigh);
  }
  const auto data = one_column(x, y);
  RfConfig cfg;
  cfg.max_depth = 1;
  cfg.bootstrap = false;
  std::vector<Index> rows(x.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<Index>(i);
  Rng trng(1);
  const auto tree = fit_tree(data.x, data.y, rows, cfg, trng);
  ASSERT_FALSE(tree.nodes.front().leaf());
  double max_neg = -1e9, min_pos = 1e9;
  for (double v : x) (v < 0 ? max_neg : min_pos) = v < 0 ? std::max(max_neg, v) : std::min(min_pos, v);
  const double thr = tree.nodes.front().threshold;
  EXPECT_GE(thr, max_neg);
  EXPECT_LT(thr, min_pos);
  const auto best = oracle::best_split(x, y, cfg.min_samples_leaf);
  ASSERT_TRUE(best);
  EXPECT_GT(best->threshold, max_neg);
  EXPECT_LT(best->threshold, min_pos);
}

TEST(Forest, RootSplitMatchesGiniOracle) {
  Rng rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 10 + static_cast<int>(rng.below(60));
    std::vector<double> x(n);
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) {
      x[i] = std::round(rng.normal(0, 3) * 4) / 4;  // ties on purpose
      y[i] = rng.bernoulli(1.0 / (1.0 + std::exp(-x[i])));
    }
    if (std::count(y.begin(), y.end(), 1) == 0 || std::count(y.begin(), y.end(), 0) == 0) continue;
    const auto data = one_column(x, y);
    RfConfig cfg;
    cfg.max_depth = 1;
    cfg.bootstrap = false;
    cfg.min_samples_leaf = 1 + static_cast<int>(rng.below(3));
    std::vector<Index> rows(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) rows[static_cast<std::size_t>(i)] = i;
    Rng trng(trial);
    const auto tree = fit_tree(data.x, data.y, rows, cfg, trng);
    const auto best = oracle::best_split(x, y, cfg.min_samples_leaf);
    const auto& root = tree.nodes.front();
    if (!best) {
      EXPECT_TRUE(root.leaf());
      continue;
    }
    // Pure nodes are not split; otherwise the chosen partition must be Gini-optimal.
    ASSERT_FALSE(root.leaf()) << trial;
    double l0 = 0, l1 = 0, r0 = 0, r1 = 0;
    for (int i = 0; i < n; ++i) (x[i] <= root.threshold ? (y[i] ? l1 : l0) : (y[i] ? r1 : r0)) += 1;
    const double imp = (l0 + l1) / n * oracle::gini(l0, l1) + (r0 + r1) / n * oracle::gini(r0, r1);
    EXPECT_NEAR(imp, best->impurity, 1e-12) << trial;
    EXPECT_GE(l0 + l1, cfg.min_samples_leaf);
    EXPECT_GE(r0 + r1, cfg.min_samples_leaf);
  }
}

TEST(Forest, DeterministicAndFitsSeparableData) {
  auto data = blobs(300, 3, 6.0, 2);
  RfConfig cfg;
  cfg.seed = 9;
  const auto a = train_rf(data, cfg), b = train_rf(data, cfg);
  ASSERT_EQ(a.forest.trees.size(), b.forest.trees.size());
  for (Index i = 0; i < data.rows(); ++i) EXPECT_EQ(a.forest.score(data.x.row(i)), b.forest.score(data.x.row(i)));
  EXPECT_GE(accuracy_on(a, data), 0.99);
}

TEST(Forest, InternalSplitsAreNonTrivial) {
  auto data = blobs(200, 4, 1.0, 3);
  RfConfig cfg;
  cfg.seed = 1;
  cfg.n_trees = 10;
  const auto f = train_forest(data, cfg);
  for (const auto& t : f.trees) {
    for (const auto& n : t.nodes) {
      if (n.leaf()) continue;
      const auto& l = t.nodes[static_cast<std::size_t>(n.left)];
      const auto& r = t.nodes[static_cast<std::size_t>(n.right)];
      EXPECT_GT(l.count_low + l.count_high, 0);
      EXPECT_GT(r.count_low + r.count_high, 0);
      EXPECT_EQ(l.count_low + r.count_low, n.count_low);
    }
  }
}

TEST(Forest, ScoreEqualsVoteTally) {
  auto data = blobs(200, 4, 1.0, 5);
  RfConfig cfg;
  cfg.seed = 3;
  cfg.n_trees = 25;
  const auto f = train_forest(data, cfg);
  for (Index i = 0; i < data.rows(); ++i) {
    int high = 0;
    for (const auto& t : f.trees) {
      std::size_t k = 0;
      while (!t.nodes[k].leaf()) {
        const auto& n = t.nodes[k];
        k = static_cast<std::size_t>(data.x(i, n.feature) <= n.threshold ? n.left : n.right);
      }
      high += t.nodes[k].count_high > t.nodes[k].count_low;
    }
    EXPECT_DOUBLE_EQ(f.score(data.x.row(i)), high / 25.0);
  }
}

TEST(Forest, MonotoneTransformInvariance) {
  Rng rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    auto data = blobs(120, 3, 1.0, 100 + trial);
    for (Index i = 0; i < data.rows(); ++i) {
      for (Index j = 0; j < data.cols(); ++j) data.x(i, j) += rng.uniform() * 1e-6;  // tie-free
    }
    auto transformed = data;
    transformed.x = data.x.array().exp() * 3.0 + 1.0;
    RfConfig cfg;
    cfg.seed = 5;
    cfg.n_trees = 15;
    const auto a = train_forest(data, cfg), b = train_forest(transformed, cfg);
    Eigen::MatrixXd test(200, 3);
    for (Index i = 0; i < test.rows(); ++i) {
      for (Index j = 0; j < 3; ++j) test(i, j) = rng.normal(0.5, 1.5);
    }
    const Eigen::MatrixXd test_t = test.array().exp() * 3.0 + 1.0;
    for (Index i = 0; i < test.rows(); ++i) EXPECT_EQ(a.score(test.row(i)), b.score(test_t.row(i)));
  }
}

TEST(Forest, Errors) {
  Dataset empty;
  empty.x.resize(0, 1);
  empty.feature_order = {"pupil_dilation_mean"};
  EXPECT_CODE(train_forest(empty, {}), "learn.EMPTY_DATASET");
  EXPECT_CODE(train_forest(one_column({1, 2, 3}, {1, 1, 1}), {}), "learn.SINGLE_CLASS");
}

TEST(Forest, TiedVoteScoresHalfAndLabelsHigh) {
  RfModel m;
  m.meta.feature_order = {"pupil_dilation_mean"};
  m.meta.feature_order_hash = feature_order_hash(m.meta.feature_order);
  DecisionTree high, low, tie;
  high.nodes = {TreeNode{-1, 0, -1, -1, 0, 3}};
  low.nodes = {TreeNode{-1, 0, -1, -1, 3, 0}};
  tie.nodes = {TreeNode{-1, 0, -1, -1, 2, 2}};
  EXPECT_EQ(tie.vote(Eigen::VectorXd::Zero(1)), kLow);
  m.forest.n_features = 1;
  for (int i = 0; i < 50; ++i) m.forest.trees.push_back(high);
  for (int i = 0; i < 50; ++i) m.forest.trees.push_back(low);
  features::FeatureVector v;
  v.values["pupil_dilation_mean"] = 0.1;
  auto p = predict(TrainedModel{m}, v);
  EXPECT_EQ(p.score, 0.5);
  EXPECT_EQ(p.label, features::LoadLabel::kHigh);
  m.forest.trees.assign(10, high);
  p = predict(TrainedModel{m}, v);
  EXPECT_EQ(p.score, 1.0);
  EXPECT_CODE(predict(TrainedModel{m}, features::FeatureVector{}), "learn.MISSING_FEATURE");
}

TEST(Mlp, GradientMatchesFiniteDifferences) {
  Rng rng(77);
  double worst = 0.0;
  for (int net_i = 0; net_i < 20; ++net_i) {
    std::vector<int> sizes{2 + static_cast<int>(rng.below(4))};
    const int hidden = 1 + static_cast<int>(rng.below(2));
    for (int h = 0; h < hidden; ++h) sizes.push_back(2 + static_cast<int>(rng.below(5)));
    sizes.push_back(1);
    Mlp net(sizes);
    net.initialize(rng);
    for (int l = 0; l < net.layer_count(); ++l) {
      for (Index i = 0; i < net.bias(l).size(); ++i) net.bias(l)(i) = rng.uniform(-0.5, 0.5);
    }
    Eigen::MatrixXd x(8, sizes.front());
    Eigen::VectorXd y(8);
    for (Index i = 0; i < x.rows(); ++i) {
      for (Index j = 0; j < x.cols(); ++j) x(i, j) = rng.normal();
      y(i) = rng.bernoulli(0.5);
    }
    const Eigen::VectorXd analytic = net.flatten(net.gradient(x, y));
    const double h = 1e-5;
    for (Index p = 0; p < net.parameter_count(); ++p) {
      const double saved = net.parameter(p);
      net.parameter(p) = saved + h;
      const double up = net.loss(x, y);
      net.parameter(p) = saved - h;
      const double down = net.loss(x, y);
      net.parameter(p) = saved;
      const double numeric = (up - down) / (2 * h);
      const double rel = std::abs(analytic(p) - numeric) / std::max({1e-8, std::abs(analytic(p)), std::abs(numeric)});
      worst = std::max(worst, rel);
    }
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(Mlp, ShapesAndOutputRange) {
  Mlp net({4, 16, 8, 1});
  Rng rng(1);
  net.initialize(rng);
  EXPECT_EQ(net.weight(0).rows(), 16);
  EXPECT_EQ(net.weight(0).cols(), 4);
  EXPECT_EQ(net.weight(2).rows(), 1);
  const double limit = std::sqrt(6.0 / (4 + 16));
  EXPECT_LE(net.weight(0).cwiseAbs().maxCoeff(), limit);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(50, 4) * 100.0;
  const Eigen::VectorXd p = net.predict_proba(x);
  EXPECT_TRUE((p.array() >= 0.0).all() && (p.array() <= 1.0).all());
  EXPECT_CODE(Mlp({3, 2}), "learn.BAD_ARCHITECTURE");
}

TEST(Mlp, SolvesXor) {
  Rng rng(3);
  Dataset d;
  d.x.resize(200, 2);
  for (int i = 0; i < 200; ++i) {
    const int a = i % 2, b = (i / 2) % 2;
    d.x(i, 0) = a + rng.normal(0, 0.01);
    d.x(i, 1) = b + rng.normal(0, 0.01);
    d.y.push_back(a ^ b);
    d.groups.push_back("P");
  }
  d.feature_order = {"pupil_dilation_mean", "fixation_count"};
  MlpConfig cfg;  // default [d, 16, 8, 1]
  cfg.learning_rate = 0.5;
  cfg.epochs = 2000;
  cfg.seed = 1;
  const auto m = train_mlp(d, cfg);
  EXPECT_EQ(accuracy_on(TrainedModel{m}, d), 1.0);
}

TEST(Mlp, LossNonIncreasingOnSeparableData) {
  const auto d = blobs(200, 2, 4.0, 8);
  MlpConfig cfg;
  cfg.seed = 2;
  const auto m = train_mlp(d, cfg);
  ASSERT_EQ(m.loss_history.size(), static_cast<std::size_t>(cfg.epochs));
  for (std::size_t i = 1; i < m.loss_history.size(); ++i) {
    EXPECT_LE(m.loss_history[i], m.loss_history[i - 1] + 1e-15) << i;
  }
}

TEST(Mlp, DivergenceIsReported) {
  auto d = blobs(100, 2, 1.0, 9);
  MlpConfig cfg;
  cfg.learning_rate = 1e300;
  cfg.seed = 1;
  EXPECT_CODE(train_mlp(d, cfg), "learn.NON_FINITE_LOSS");
}

TEST(Model, SaveLoadRoundTripPreservesPredictions) {
  Rng rng(55);
  const auto d = blobs(200, 4, 1.5, 10);
  for (auto kind : {ModelKind::kRf, ModelKind::kMlp}) {
    ModelSpec spec;
    spec.kind = kind;
    spec.rf.n_trees = 20;
    spec.rf.seed = 4;
    spec.mlp.seed = 4;
    const auto m = train(spec, d);
    std::stringstream ss;
    save_model(ss, m);
    const auto back = load_model(ss);
    std::stringstream again;
    save_model(again, back);
    EXPECT_EQ(ss.str(), again.str());
    for (int i = 0; i < 1000; ++i) {
      features::FeatureVector v;
      for (const auto& name : d.feature_order) v.values[name] = rng.normal(0, 3);
      const auto p = predict(m, v), q = predict(back, v);
      ASSERT_EQ(p.score, q.score);
      ASSERT_EQ(p.label, q.label);
    }
  }
}

TEST(Model, FileErrors) {
  const auto d = blobs(100, 2, 1.5, 11);
  ModelSpec spec;
  spec.kind = ModelKind::kMlp;
  spec.mlp.epochs = 10;
  const auto m = train(spec, d);
  std::stringstream ss;
  save_model(ss, m);
  const std::string text = ss.str();

  std::stringstream truncated(text.substr(0, text.size() / 2));
  EXPECT_CODE(load_model(truncated), "learn.CORRUPT_FILE");

  auto doc = nlohmann::json::parse(text);
  doc["meta"]["feature_order"][1] = "fixation_count";
  std::stringstream altered(doc.dump());
  const auto loaded = load_model(altered);
  EXPECT_CODE(predict(loaded, vector_from(d, 0)), "learn.FEATURE_ORDER_MISMATCH");

  doc = nlohmann::json::parse(text);
  doc["format_version"] = 99;
  std::stringstream newer(doc.dump());
  EXPECT_CODE(load_model(newer), "learn.VERSION_MISMATCH");
}

TEST(Model, FineTuneEmptyBumpsVersionOnly) {
  const auto d = blobs(100, 2, 1.5, 12);
  for (auto kind : {ModelKind::kRf, ModelKind::kMlp}) {
    ModelSpec spec;
    spec.kind = kind;
    spec.rf.n_trees = 10;
    spec.mlp.epochs = 20;
    const auto m = train(spec, d);
    Dataset empty;
    empty.x.resize(0, 2);
    empty.feature_order = d.feature_order;
    const auto t = fine_tune(m, empty);
    EXPECT_EQ(meta_of(t).version, meta_of(m).version + 1);
    EXPECT_EQ(predict_scores(t, d.x), predict_scores(m, d.x));
  }
}

TEST(Model, FineTuneChecksCompatibility) {
  const auto d = blobs(100, 2, 1.5, 13);
  ModelSpec spec;
  spec.kind = ModelKind::kMlp;
  spec.mlp.epochs = 5;
  const auto m = train(spec, d);
  auto other = d;
  other.profile = features::Profile::kPrivacy;
  EXPECT_CODE(fine_tune(m, other), "learn.PROFILE_MISMATCH");
  auto reordered = d;
  std::swap(reordered.feature_order[0], reordered.feature_order[1]);
  EXPECT_CODE(fine_tune(m, reordered), "learn.FEATURE_ORDER_MISMATCH");
}

TEST(Model, MlpFineTuneHelpsShiftedUser) {
  const auto base_data = blobs(400, 2, 2.0, 14);
  // The new user's classes sit 1.5 higher on both axes.
  auto fresh = blobs(200, 2, 2.0, 15, 1, 1.5);
  ModelSpec spec;
  spec.kind = ModelKind::kMlp;
  spec.mlp.seed = 3;
  const auto base = train(spec, base_data);
  const auto tuned = fine_tune(base, fresh);
  EXPECT_GE(accuracy_on(tuned, fresh), accuracy_on(base, fresh));
  EXPECT_EQ(meta_of(tuned).version, 2);
}

TEST(Model, RfFineTuneIsDeterministic) {
  const auto d = blobs(150, 3, 1.0, 16);
  const auto fresh = blobs(60, 3, 1.0, 17);
  ModelSpec spec;
  spec.kind = ModelKind::kRf;
  spec.rf.n_trees = 15;
  spec.rf.seed = 8;
  const auto m = train(spec, d);
  const auto a = fine_tune(m, fresh), b = fine_tune(m, fresh);
  EXPECT_EQ(predict_scores(a, d.x), predict_scores(b, d.x));
  EXPECT_EQ(std::get<RfModel>(a).training.rows(), 210);
}

TEST(Model, CrossValidationHasNoLeakageAndIsDeterministic) {
  const auto d = blobs(300, 3, 1.0, 18, 9);
  ModelSpec spec;
  spec.kind = ModelKind::kRf;
  spec.rf.n_trees = 20;
  const auto a = cross_validate(spec, d, 3, 5), b = cross_validate(spec, d, 3, 5);
  EXPECT_EQ(eval_report_json(a), eval_report_json(b));
  EXPECT_EQ(a.rows, 300);
  std::set<std::string> seen;
  for (const auto& f : a.folds) {
    for (const auto& g : f.test_groups) EXPECT_TRUE(seen.insert(g).second);
  }
  EXPECT_EQ(seen.size(), 9u);
}

TEST(Dataset, FromVectorsSkipsUnusableRows) {
  std::vector<features::FeatureVector> v(4);
  for (auto& x : v) {
    x.participant = "P";
    x.values["pupil_dilation_mean"] = 1.0;
    x.label = features::LoadLabel::kHigh;
  }
  v[1].label.reset();
  v[2].inferable = false;
  v[3].values["pupil_dilation_mean"] = std::nullopt;
  const auto d = Dataset::from_vectors(v, {"pupil_dilation_mean"}, features::Profile::kRaw);
  EXPECT_EQ(d.rows(), 1);
  EXPECT_CODE(Dataset::from_vectors(v, {"bogus"}, features::Profile::kRaw), "learn.UNKNOWN_FEATURE");
}

TEST(Dataset, StandardizerRejectsConstantColumn) {
  Eigen::MatrixXd x(3, 2);
  x << 1, 5, 2, 5, 3, 5;
  EXPECT_CODE(Standardizer::fit(x), "learn.CONSTANT_FEATURE");
}
