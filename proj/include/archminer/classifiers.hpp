#pragma once

// Binary QA-AT post classifiers over sparse TF-IDF feature vectors.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "archminer/features.hpp"

namespace archminer {

enum class Algorithm { svm, bayes, dt, lr, rf, bagging };

std::string_view to_string(Algorithm algorithm) noexcept;
std::optional<Algorithm> parse_algorithm(std::string_view name) noexcept;
const std::array<Algorithm, 6>& all_algorithms() noexcept;

struct Hyperparams {
  double svm_lambda = 1e-4;
  std::uint32_t svm_epochs = 50;
  double lr_lambda = 1e-4;
  std::uint32_t lr_epochs = 200;
  // 0 picks 1/L from the data's smoothness bound.
  double lr_step = 0;
  std::size_t dt_min_leaf = 2;
  std::uint32_t rf_trees = 100;
  std::uint32_t bagging_trees = 50;
  std::size_t ensemble_min_leaf = 1;

  void validate() const;
  nlohmann::ordered_json to_json() const;
  static Hyperparams from_json(const nlohmann::json& j);
  bool operator==(const Hyperparams&) const = default;
};

struct SplitConfig {
  double train_fraction = 0.7;
  std::uint64_t seed = 42;
};

struct Split {
  std::vector<std::size_t> train;  // indices into the input
  std::vector<std::size_t> test;
};

// Seeded uniform shuffle; the first ceil(fraction * n) go to training.
// Throws Error(degenerate_labels) unless both classes are present.
Split split_train_test(std::span<const FeatureVector> examples, const SplitConfig& config);
Split split_train_test(const std::vector<bool>& labels, const SplitConfig& config);

// Splits on presence of one feature. Leaves have feature == -1.
struct TreeNode {
  std::int32_t feature = -1;
  double score = 0;  // gain ratio of the split at this node
  std::uint32_t positives = 0;
  std::uint32_t negatives = 0;
  std::int32_t absent = -1;  // child when the feature weight is 0
  std::int32_t present = -1;

  bool operator==(const TreeNode&) const = default;
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  const TreeNode& leaf_for(const FeatureVector& fv) const;
  bool operator==(const Tree&) const = default;
};

struct Prediction {
  bool label = false;
  double score = 0;

  bool operator==(const Prediction&) const = default;
};

class ClassifierModel {
 public:
  Algorithm algorithm() const noexcept { return algorithm_; }
  const Hyperparams& hyperparams() const noexcept { return hyperparams_; }
  std::size_t num_features() const noexcept { return num_features_; }
  const std::string& train_fingerprint() const noexcept { return train_fingerprint_; }
  std::uint64_t seed() const noexcept { return seed_; }

  // score: margin for svm and lr, log-odds for bayes, positive vote fraction
  // for rf and bagging, positive leaf fraction for dt.
  Prediction predict(const FeatureVector& fv) const;

  // Bayes only: {P(negative), P(positive)}.
  std::array<double, 2> posteriors(const FeatureVector& fv) const;
  // Ensembles and dt: number of trees voting positive.
  std::size_t positive_votes(const FeatureVector& fv) const;

  const std::vector<double>& weights() const noexcept { return weights_; }
  double bias() const noexcept { return bias_; }
  const std::vector<Tree>& trees() const noexcept { return trees_; }

  nlohmann::ordered_json to_json() const;
  static ClassifierModel from_json(const nlohmann::json& j);

  bool operator==(const ClassifierModel&) const = default;

 private:
  friend ClassifierModel train(Algorithm, std::span<const FeatureVector>, std::size_t, const Hyperparams&, std::uint64_t);

  Algorithm algorithm_ = Algorithm::svm;
  Hyperparams hyperparams_;
  std::size_t num_features_ = 0;
  std::string train_fingerprint_;
  std::uint64_t seed_ = 0;
  // svm, lr: weights and bias. bayes: per-feature log-likelihood ratio
  // log P(f|+) - log P(f|-) in weights_, with the two classes' log priors and
  // log likelihood tables in log_prior_ and log_likelihood_.
  std::vector<double> weights_;
  double bias_ = 0;
  std::array<double, 2> log_prior_{};
  std::array<std::vector<double>, 2> log_likelihood_;
  std::vector<Tree> trees_;
};

// Every example must carry a label. Throws Error(degenerate_labels) unless
// both classes occur, Error(non_finite_loss) if optimisation diverges.
ClassifierModel train(Algorithm algorithm, std::span<const FeatureVector> train_set, std::size_t num_features,
                      const Hyperparams& hyperparams, std::uint64_t seed);

std::vector<Prediction> predict_batch(const ClassifierModel& model, std::span<const FeatureVector> batch);

// Mean log loss of a logistic model plus (lambda / 2) * |w|^2, bias not
// regularised, and its gradient (weights, then bias last).
struct LogisticObjective {
  double loss = 0;
  std::vector<double> gradient;
};
LogisticObjective logistic_objective(const std::vector<double>& weights, double bias, std::span<const FeatureVector> data,
                                     double lambda);

// Grows one decision tree on the given sample (indices into data, repeats
// allowed). `features_per_split` of 0 considers every feature.
Tree grow_tree(std::span<const FeatureVector> data, std::span<const std::size_t> sample, std::size_t min_leaf,
               std::size_t features_per_split, std::uint64_t seed);

}  // namespace archminer
