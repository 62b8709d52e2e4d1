#include "archminer/classifiers.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "archminer/error.hpp"
#include "archminer/random.hpp"
#include "oracles.hpp"

namespace archminer {
namespace {

FeatureVector fv(std::vector<std::pair<std::uint32_t, double>> weights, std::optional<bool> label = std::nullopt) {
  return FeatureVector{std::move(weights), label};
}

// Positives carry feature 0 with weight 1, negatives carry nothing but a
// shared filler feature 1.
std::vector<FeatureVector> single_feature_data() {
  std::vector<FeatureVector> data;
  for (int i = 0; i < 10; ++i) data.push_back(fv({{0, 1.0}, {1, 0.5}}, true));
  for (int i = 0; i < 10; ++i) data.push_back(fv({{1, 0.5}}, false));
  return data;
}

// Points separable with margin >= 0.5 by w = (+1 on 0..9, -1 on 10..19);
// features 20..29 are noise shared by both classes.
std::vector<FeatureVector> separable_data(std::size_t per_class, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<FeatureVector> data;
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    const bool positive = i % 2 == 0;
    std::map<std::uint32_t, double> w;
    const std::uint32_t base = positive ? 0 : 10;
    const auto signal = 1 + rng.below(3);
    for (std::uint64_t k = 0; k < signal; ++k) w[base + static_cast<std::uint32_t>(rng.below(10))] = 0.5 + 0.5 * rng.uniform();
    for (int k = 0; k < 3; ++k) w[20 + static_cast<std::uint32_t>(rng.below(10))] = 0.3 * rng.uniform() + 0.01;
    data.push_back(fv({w.begin(), w.end()}, positive));
  }
  return data;
}

std::vector<FeatureVector> pick(const std::vector<FeatureVector>& data, const std::vector<std::size_t>& idx) {
  std::vector<FeatureVector> out;
  for (auto i : idx) out.push_back(data[i]);
  return out;
}

double f_measure(const ClassifierModel& m, const std::vector<FeatureVector>& test) {
  double tp = 0, fp = 0, fn = 0;
  for (const auto& x : test) {
    const bool p = m.predict(x).label;
    tp += p && *x.label;
    fp += p && !*x.label;
    fn += !p && *x.label;
  }
  return 2 * tp / (2 * tp + fp + fn);
}

Hyperparams fast_params() {
  Hyperparams h;
  h.rf_trees = 20;
  h.bagging_trees = 10;
  return h;
}

TEST(SplitTrainTest, SeventyThirty) {
  std::vector<bool> labels(100, false);
  for (int i = 0; i < 50; ++i) labels[i] = true;
  const auto s = split_train_test(labels, {0.7, 42});
  EXPECT_EQ(s.train.size(), 70u);
  EXPECT_EQ(s.test.size(), 30u);
  std::set<std::size_t> all(s.train.begin(), s.train.end());
  all.insert(s.test.begin(), s.test.end());
  EXPECT_EQ(all.size(), 100u);
  EXPECT_EQ(*all.rbegin(), 99u);
}

TEST(SplitTrainTest, RoundsTrainSizeUp) {
  const std::vector<bool> labels{true, false, true};
  EXPECT_EQ(split_train_test(labels, {0.5, 1}).train.size(), 2u);
}

TEST(SplitTrainTest, DeterministicPerSeed) {
  std::vector<bool> labels(1000);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = i % 3 == 0;
  const auto a = split_train_test(labels, {0.7, 5});
  const auto b = split_train_test(labels, {0.7, 5});
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.test, b.test);
  const auto c = split_train_test(labels, {0.7, 6});
  EXPECT_NE(a.train, c.train);
}

TEST(SplitTrainTest, Errors) {
  EXPECT_THROW(split_train_test(std::vector<bool>{true}, {}), Error);
  try {
    split_train_test(std::vector<bool>{true, true, true}, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::degenerate_labels);
  }
  EXPECT_THROW(split_train_test(std::vector<bool>{true, false}, {1.0, 1}), Error);
  EXPECT_THROW(split_train_test(std::vector<bool>{true, false}, {0.0, 1}), Error);
}

TEST(SplitTrainTest, FeatureVectorOverloadMatchesLabels) {
  const auto data = separable_data(20, 3);
  std::vector<bool> labels;
  for (const auto& x : data) labels.push_back(*x.label);
  EXPECT_EQ(split_train_test(data, {0.7, 9}).train, split_train_test(labels, {0.7, 9}).train);
}

TEST(Algorithm, NamesRoundTrip) {
  for (auto a : all_algorithms()) EXPECT_EQ(parse_algorithm(to_string(a)), a);
  EXPECT_FALSE(parse_algorithm("knn"));
}

TEST(Train, SingleFeatureDataIsFitPerfectly) {
  const auto data = single_feature_data();
  for (auto a : all_algorithms()) {
    const auto m = train(a, data, 2, fast_params(), 11);
    for (const auto& x : data) EXPECT_EQ(m.predict(x).label, *x.label) << to_string(a);
  }
}

TEST(Train, DegenerateLabels) {
  std::vector<FeatureVector> data{fv({{0, 1.0}}, true), fv({{1, 1.0}}, true)};
  for (auto a : all_algorithms()) {
    try {
      train(a, data, 2, fast_params(), 1);
      FAIL() << to_string(a);
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::degenerate_labels);
    }
  }
}

TEST(Train, DivergentLogisticRegressionReportsNonFiniteLoss) {
  Hyperparams h;
  h.lr_step = 1e300;
  const auto data = single_feature_data();
  try {
    train(Algorithm::lr, data, 2, h, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::non_finite_loss);
  }
}

TEST(Train, RejectsBadHyperparams) {
  Hyperparams h;
  h.svm_lambda = 0;
  EXPECT_THROW(train(Algorithm::svm, single_feature_data(), 2, h, 1), Error);
}

TEST(Train, UnprunedTreeFitsConsistentData) {
  // Distinct feature sets, each with a fixed label.
  Rng rng(21);
  std::vector<FeatureVector> data;
  std::set<std::vector<std::uint32_t>> seen;
  while (data.size() < 60) {
    std::vector<std::pair<std::uint32_t, double>> w;
    std::vector<std::uint32_t> key;
    for (std::uint32_t f = 0; f < 8; ++f)
      if (rng.below(2)) {
        w.emplace_back(f, 1.0);
        key.push_back(f);
      }
    if (!seen.insert(key).second) continue;
    data.push_back(fv(w, rng.below(2) == 1));
  }
  Hyperparams h;
  h.dt_min_leaf = 1;
  const auto m = train(Algorithm::dt, data, 8, h, 3);
  for (const auto& x : data) EXPECT_EQ(m.predict(x).label, *x.label);
}

TEST(LogisticObjective, GradientMatchesFiniteDifferences) {
  const std::vector<FeatureVector> data{fv({{0, 1.0}}, true), fv({}, false)};
  const double lambda = 0.1;
  auto loss = [&](std::vector<double> w, double b) { return logistic_objective(w, b, data, lambda).loss; };
  auto check = [&](const std::vector<double>& w, double b) {
    const auto obj = logistic_objective(w, b, data, lambda);
    const double h = 1e-6;
    const double dw = (loss({w[0] + h}, b) - loss({w[0] - h}, b)) / (2 * h);
    const double db = (loss(w, b + h) - loss(w, b - h)) / (2 * h);
    EXPECT_NEAR(obj.gradient[0], dw, 1e-5 * std::max(1.0, std::abs(dw)));
    EXPECT_NEAR(obj.gradient[1], db, 1e-5 * std::max(1.0, std::abs(db)));
  };
  check({0.3}, -0.2);
  check({-2.0}, 1.5);

  // At the optimum found by training, both gradients vanish.
  Hyperparams hp;
  hp.lr_lambda = lambda;
  hp.lr_epochs = 5000;
  const auto m = train(Algorithm::lr, data, 1, hp, 1);
  check(m.weights(), m.bias());
  const auto at_opt = logistic_objective(m.weights(), m.bias(), data, lambda);
  EXPECT_NEAR(at_opt.gradient[0], 0.0, 1e-6);
  EXPECT_NEAR(at_opt.gradient[1], 0.0, 1e-6);
}

TEST(Predict, SvmMarginIsPositiveForThePositiveFeature) {
  const auto m = train(Algorithm::svm, single_feature_data(), 2, {}, 4);
  const auto p = m.predict(fv({{0, 1.0}}));
  EXPECT_TRUE(p.label);
  EXPECT_GT(p.score, 0.0);
}

TEST(Predict, LabelIsThresholdedScore) {
  const auto data = separable_data(40, 8);
  for (auto a : all_algorithms()) {
    const auto m = train(a, data, 30, fast_params(), 2);
    const double cut = (a == Algorithm::svm || a == Algorithm::lr || a == Algorithm::bayes) ? 0.0 : 0.5;
    for (const auto& x : data) {
      const auto p = m.predict(x);
      EXPECT_EQ(p.label, p.score > cut) << to_string(a);
    }
  }
}

TEST(Predict, BayesPosteriorsAreProbabilities) {
  const auto data = separable_data(60, 12);
  const auto m = train(Algorithm::bayes, data, 30, {}, 1);
  Rng rng(4);
  for (int k = 0; k < 200; ++k) {
    std::map<std::uint32_t, double> w;
    for (int j = 0; j < 6; ++j) w[static_cast<std::uint32_t>(rng.below(35))] = 5 * rng.uniform();
    const auto post = m.posteriors(fv({w.begin(), w.end()}));
    EXPECT_GE(post[0], 0.0);
    EXPECT_LE(post[1], 1.0);
    EXPECT_NEAR(post[0] + post[1], 1.0, 1e-9);
  }
  EXPECT_THROW(train(Algorithm::lr, data, 30, {}, 1).posteriors(data[0]), Error);
}

TEST(Predict, BayesScoreIsLogOdds) {
  const auto data = separable_data(30, 2);
  const auto m = train(Algorithm::bayes, data, 30, {}, 1);
  for (int i = 0; i < 10; ++i) {
    const auto post = m.posteriors(data[i]);
    EXPECT_NEAR(m.predict(data[i]).score, std::log(post[1] / post[0]), 1e-6);
  }
}

TEST(Predict, RandomForestVoteGranularity) {
  const auto data = separable_data(50, 5);
  const auto m = train(Algorithm::rf, data, 30, {}, 9);
  ASSERT_EQ(m.trees().size(), 100u);
  Rng rng(1);
  for (int k = 0; k < 100; ++k) {
    std::map<std::uint32_t, double> w;
    for (int j = 0; j < 4; ++j) w[static_cast<std::uint32_t>(rng.below(30))] = 1.0;
    const double s = m.predict(fv({w.begin(), w.end()})).score;
    EXPECT_NEAR(s * 100, std::round(s * 100), 1e-9);
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 1.0);
  }
}

TEST(Predict, EnsembleVotesEqualSumOfTreeVotes) {
  const auto data = separable_data(40, 6);
  for (auto a : {Algorithm::rf, Algorithm::bagging}) {
    const auto m = train(a, data, 30, fast_params(), 3);
    for (const auto& x : data) {
      std::size_t votes = 0;
      for (const auto& t : m.trees()) {
        const auto& leaf = t.leaf_for(x);
        votes += leaf.positives > leaf.negatives;
      }
      EXPECT_EQ(m.positive_votes(x), votes);
      EXPECT_DOUBLE_EQ(m.predict(x).score, static_cast<double>(votes) / m.trees().size());
    }
  }
}

TEST(PredictBatch, MatchesSinglePredict) {
  const auto data = separable_data(25, 44);
  for (auto a : all_algorithms()) {
    const auto m = train(a, data, 30, fast_params(), 7);
    EXPECT_TRUE(predict_batch(m, {}).empty());
    const auto batch = predict_batch(m, data);
    ASSERT_EQ(batch.size(), 50u);
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto single = m.predict(data[i]);
      EXPECT_EQ(batch[i].label, single.label);
      EXPECT_EQ(batch[i].score, single.score);
    }
    const std::vector<FeatureVector> repeated(5, data[3]);
    for (const auto& p : predict_batch(m, repeated)) EXPECT_EQ(p.score, batch[3].score);
  }
}

TEST(Train, DeterministicGivenSeed) {
  const auto data = separable_data(40, 10);
  const auto probe = separable_data(30, 99);
  for (auto a : all_algorithms()) {
    const auto m1 = train(a, data, 30, fast_params(), 5);
    const auto m2 = train(a, data, 30, fast_params(), 5);
    EXPECT_EQ(m1.train_fingerprint(), m2.train_fingerprint());
    EXPECT_TRUE(m1 == m2) << to_string(a);
    for (const auto& x : probe) EXPECT_EQ(m1.predict(x).score, m2.predict(x).score);
  }
  EXPECT_NE(train(Algorithm::svm, data, 30, {}, 5).train_fingerprint(),
            train(Algorithm::svm, data, 30, {}, 6).train_fingerprint());
}

TEST(Train, LinearModelsSeparateMarginData) {
  const auto data = separable_data(500, 17);
  std::vector<bool> labels;
  for (const auto& x : data) labels.push_back(*x.label);
  const auto split = split_train_test(labels, {0.7, 42});
  const auto tr = pick(data, split.train);
  const auto te = pick(data, split.test);
  for (auto a : {Algorithm::svm, Algorithm::lr}) {
    const auto m = train(a, tr, 30, {}, 1);
    EXPECT_GE(f_measure(m, te), 0.95) << to_string(a);
  }
}

// Routes every training example through the tree and recomputes each
// internal node's split score from the examples that reached it.
TEST(GrowTree, SplitScoresMatchBruteForceOracle) {
  Rng rng(77);
  std::vector<FeatureVector> data;
  for (int i = 0; i < 120; ++i) {
    std::vector<std::pair<std::uint32_t, double>> w;
    const bool label = rng.below(2) == 1;
    for (std::uint32_t f = 0; f < 12; ++f)
      if (rng.uniform() < (label && f < 4 ? 0.7 : 0.3)) w.emplace_back(f, 1.0);
    data.push_back(fv(w, label));
  }
  std::vector<std::size_t> all(data.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const auto tree = grow_tree(data, all, 2, 0, 1);
  ASSERT_GT(tree.nodes.size(), 1u);

  std::vector<std::vector<std::size_t>> reached(tree.nodes.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::int32_t n = 0;
    for (;;) {
      reached[n].push_back(i);
      const auto& node = tree.nodes[n];
      if (node.feature < 0) break;
      n = data[i].weight(static_cast<std::uint32_t>(node.feature)) > 0 ? node.present : node.absent;
    }
  }
  std::size_t internal = 0;
  for (std::size_t n = 0; n < tree.nodes.size(); ++n) {
    const auto& node = tree.nodes[n];
    std::vector<bool> labels;
    for (auto i : reached[n]) labels.push_back(*data[i].label);
    EXPECT_EQ(node.positives + node.negatives, reached[n].size());
    if (node.feature < 0) continue;
    ++internal;
    auto score_of = [&](std::uint32_t f) {
      std::vector<bool> present;
      for (auto i : reached[n]) present.push_back(data[i].weight(f) > 0);
      return testing::brute_force_gain_ratio(present, labels);
    };
    EXPECT_NEAR(node.score, score_of(static_cast<std::uint32_t>(node.feature)), 1e-9);
    // No valid split beats the chosen one.
    for (std::uint32_t f = 0; f < 12; ++f) {
      std::size_t with = 0;
      for (auto i : reached[n]) with += data[i].weight(f) > 0;
      if (with >= 2 && reached[n].size() - with >= 2) EXPECT_LE(score_of(f), node.score + 1e-12);
    }
  }
  EXPECT_GT(internal, 0u);
}

TEST(GrowTree, RespectsMinLeaf) {
  const auto data = separable_data(30, 13);
  std::vector<std::size_t> all(data.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const auto tree = grow_tree(data, all, 5, 0, 1);
  for (const auto& n : tree.nodes) EXPECT_GE(n.positives + n.negatives, 5u);
}

TEST(ClassifierModel, JsonRoundTrip) {
  const auto data = separable_data(30, 31);
  for (auto a : all_algorithms()) {
    const auto m = train(a, data, 30, fast_params(), 8);
    const auto back = ClassifierModel::from_json(nlohmann::json::parse(m.to_json().dump()));
    EXPECT_TRUE(back == m) << to_string(a);
    for (const auto& x : data) EXPECT_EQ(back.predict(x).score, m.predict(x).score);
  }
}

TEST(ClassifierModel, RejectsMalformedJson) {
  EXPECT_THROW(ClassifierModel::from_json(nlohmann::json::parse(R"({"format":"other"})")), Error);
  auto j = train(Algorithm::lr, single_feature_data(), 2, {}, 1).to_json();
  j["weights"] = {1.0};
  EXPECT_THROW(ClassifierModel::from_json(nlohmann::json::parse(j.dump())), Error);
}

TEST(Hyperparams, JsonRoundTrip) {
  Hyperparams h;
  h.rf_trees = 7;
  h.lr_step = 0.5;
  EXPECT_EQ(Hyperparams::from_json(nlohmann::json::parse(h.to_json().dump())), h);
}

}  // namespace
}  // namespace archminer
