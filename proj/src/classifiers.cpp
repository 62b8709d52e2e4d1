#include "archminer/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "archminer/error.hpp"
#include "archminer/fingerprint.hpp"
#include "archminer/gain_ratio.hpp"
#include "archminer/random.hpp"

namespace archminer {
namespace {

bool label_of(const FeatureVector& fv) {
  if (!fv.label) throw Error(ErrorKind::invalid_argument, "training example without a label");
  return *fv.label;
}

void require_both_classes(std::span<const FeatureVector> data) {
  std::size_t pos = 0;
  for (const auto& fv : data) pos += label_of(fv);
  if (pos == 0 || pos == data.size()) throw Error(ErrorKind::degenerate_labels, "training set holds a single class");
}

double dot(const std::vector<double>& w, const FeatureVector& fv) {
  double s = 0;
  for (const auto& [i, x] : fv.weights)
    if (i < w.size()) s += w[i] * x;
  return s;
}

double sigmoid(double z) { return z >= 0 ? 1 / (1 + std::exp(-z)) : std::exp(z) / (1 + std::exp(z)); }

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

std::string training_fingerprint(Algorithm algorithm, std::span<const FeatureVector> data, std::size_t num_features,
                                 const Hyperparams& h, std::uint64_t seed) {
  Fingerprint fp;
  fp.update_field(to_string(algorithm)).update_field(h.to_json().dump()).update_u64(num_features).update_u64(seed);
  fp.update_u64(data.size());
  for (const auto& fv : data) {
    fp.update_u64(fv.label.value_or(false)).update_u64(fv.weights.size());
    for (const auto& [i, x] : fv.weights) fp.update_u64(i).update_f64(x);
  }
  return fp.hex();
}

void train_svm(std::span<const FeatureVector> data, std::size_t num_features, const Hyperparams& h, std::uint64_t seed,
               std::vector<double>& weights, double& bias) {
  // Pegasos with w = scale * v; the bias is an extra constant feature.
  std::vector<double> v(num_features + 1, 0.0);
  double scale = 1;
  Rng rng(mix_seed(seed, 1));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::uint64_t t = 0;
  for (std::uint32_t epoch = 0; epoch < h.svm_epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    for (auto i : order) {
      ++t;
      const double eta = 1.0 / (h.svm_lambda * static_cast<double>(t));
      const double y = label_of(data[i]) ? 1.0 : -1.0;
      const double margin = y * scale * (dot(v, data[i]) + v[num_features]);
      const double shrink = 1 - eta * h.svm_lambda;
      if (shrink <= 0) {
        std::fill(v.begin(), v.end(), 0.0);
        scale = 1;
      } else {
        scale *= shrink;
      }
      if (margin < 1) {
        const double step = eta * y / scale;
        for (const auto& [f, x] : data[i].weights)
          if (f < num_features) v[f] += step * x;
        v[num_features] += step;
      }
      if (scale < 1e-9) {
        for (auto& x : v) x *= scale;
        scale = 1;
      }
    }
  }
  weights.assign(num_features, 0.0);
  for (std::size_t f = 0; f < num_features; ++f) weights[f] = v[f] * scale;
  bias = v[num_features] * scale;
  for (double w : weights)
    if (!std::isfinite(w)) throw Error(ErrorKind::non_finite_loss, "svm weights diverged");
}

void train_lr(std::span<const FeatureVector> data, std::size_t num_features, const Hyperparams& h,
              std::vector<double>& weights, double& bias) {
  double step = h.lr_step;
  if (step == 0) {
    double max_sq = 0;
    for (const auto& fv : data) {
      double sq = 1;
      for (const auto& [i, x] : fv.weights) sq += x * x;
      max_sq = std::max(max_sq, sq);
    }
    step = 1 / (0.25 * max_sq + h.lr_lambda);
  }
  weights.assign(num_features, 0.0);
  bias = 0;
  for (std::uint32_t epoch = 0; epoch < h.lr_epochs; ++epoch) {
    const auto obj = logistic_objective(weights, bias, data, h.lr_lambda);
    if (!std::isfinite(obj.loss)) throw Error(ErrorKind::non_finite_loss, "logistic regression loss is not finite");
    for (std::size_t f = 0; f < num_features; ++f) weights[f] -= step * obj.gradient[f];
    bias -= step * obj.gradient[num_features];
  }
  const auto final_obj = logistic_objective(weights, bias, data, h.lr_lambda);
  if (!std::isfinite(final_obj.loss)) throw Error(ErrorKind::non_finite_loss, "logistic regression loss is not finite");
}

struct Grower {
  std::span<const FeatureVector> data;
  std::size_t min_leaf;
  std::size_t features_per_split;
  Rng rng;
  Tree tree;

  std::int32_t grow(std::vector<std::size_t> sample) {
    const auto id = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    TreeNode node;
    for (auto i : sample) (label_of(data[i]) ? node.positives : node.negatives) += 1;
    const std::size_t n = sample.size();
    if (node.positives == 0 || node.negatives == 0 || n < 2 * min_leaf) {
      tree.nodes[id] = node;
      return id;
    }
    std::map<std::uint32_t, std::pair<std::uint32_t, std::uint32_t>> present;
    for (auto i : sample)
      for (const auto& [f, x] : data[i].weights) {
        auto& c = present[f];
        (label_of(data[i]) ? c.first : c.second) += 1;
      }
    std::vector<std::uint32_t> valid;
    for (const auto& [f, c] : present) {
      const std::size_t with = c.first + c.second;
      if (with >= min_leaf && n - with >= min_leaf && with < n) valid.push_back(f);
    }
    if (features_per_split > 0 && valid.size() > features_per_split) {
      for (std::size_t k = 0; k < features_per_split; ++k)
        std::swap(valid[k], valid[k + rng.below(valid.size() - k)]);
      valid.resize(features_per_split);
      std::sort(valid.begin(), valid.end());
    }
    if (valid.empty()) {
      tree.nodes[id] = node;
      return id;
    }
    std::int32_t best = -1;
    double best_score = -1;
    for (auto f : valid) {
      const auto& c = present[f];
      const double s = gain_ratio(PresenceCounts{c.first, c.second, node.positives, node.negatives});
      if (s > best_score) {
        best_score = s;
        best = static_cast<std::int32_t>(f);
      }
    }
    std::vector<std::size_t> with, without;
    for (auto i : sample) (data[i].weight(static_cast<std::uint32_t>(best)) > 0 ? with : without).push_back(i);
    node.feature = best;
    node.score = best_score;
    sample.clear();
    sample.shrink_to_fit();
    node.absent = grow(std::move(without));
    node.present = grow(std::move(with));
    tree.nodes[id] = node;
    return id;
  }
};

int count_present_features(std::span<const FeatureVector> data) {
  std::vector<std::uint32_t> seen;
  for (const auto& fv : data)
    for (const auto& [f, x] : fv.weights) seen.push_back(f);
  std::sort(seen.begin(), seen.end());
  return static_cast<int>(std::unique(seen.begin(), seen.end()) - seen.begin());
}

nlohmann::ordered_json tree_json(const Tree& t) {
  auto nodes = nlohmann::ordered_json::array();
  for (const auto& n : t.nodes)
    nodes.push_back(nlohmann::ordered_json::array({n.feature, n.score, n.positives, n.negatives, n.absent, n.present}));
  return nodes;
}

Tree tree_from_json(const nlohmann::json& j) {
  Tree t;
  for (const auto& n : j) {
    TreeNode node{n.at(0).get<std::int32_t>(), n.at(1).get<double>(), n.at(2).get<std::uint32_t>(),
                  n.at(3).get<std::uint32_t>(), n.at(4).get<std::int32_t>(), n.at(5).get<std::int32_t>()};
    t.nodes.push_back(node);
  }
  for (const auto& n : t.nodes) {
    const auto size = static_cast<std::int32_t>(t.nodes.size());
    if (n.feature >= 0 && (n.absent <= 0 || n.present <= 0 || n.absent >= size || n.present >= size))
      throw Error(ErrorKind::malformed_input, "tree node has an invalid child index");
  }
  if (t.nodes.empty()) throw Error(ErrorKind::malformed_input, "empty tree");
  return t;
}

bool leaf_label(const TreeNode& leaf) { return leaf.positives > leaf.negatives; }

}  // namespace

std::string_view to_string(Algorithm a) noexcept {
  switch (a) {
    case Algorithm::svm: return "svm";
    case Algorithm::bayes: return "bayes";
    case Algorithm::dt: return "dt";
    case Algorithm::lr: return "lr";
    case Algorithm::rf: return "rf";
    case Algorithm::bagging: return "bagging";
  }
  return "?";
}

std::optional<Algorithm> parse_algorithm(std::string_view name) noexcept {
  for (auto a : all_algorithms())
    if (to_string(a) == name) return a;
  return std::nullopt;
}

const std::array<Algorithm, 6>& all_algorithms() noexcept {
  static constexpr std::array<Algorithm, 6> all{Algorithm::svm, Algorithm::bayes, Algorithm::dt,
                                                Algorithm::lr,  Algorithm::rf,    Algorithm::bagging};
  return all;
}

void Hyperparams::validate() const {
  if (!(svm_lambda > 0) || !(lr_lambda >= 0) || svm_epochs == 0 || lr_epochs == 0 || lr_step < 0 || dt_min_leaf == 0 ||
      rf_trees == 0 || bagging_trees == 0 || ensemble_min_leaf == 0)
    throw Error(ErrorKind::invalid_argument, "classifier hyperparameters out of range");
}

nlohmann::ordered_json Hyperparams::to_json() const {
  return {{"svm_lambda", svm_lambda},       {"svm_epochs", svm_epochs}, {"lr_lambda", lr_lambda},
          {"lr_epochs", lr_epochs},         {"lr_step", lr_step},       {"dt_min_leaf", dt_min_leaf},
          {"rf_trees", rf_trees},           {"bagging_trees", bagging_trees},
          {"ensemble_min_leaf", ensemble_min_leaf}};
}

Hyperparams Hyperparams::from_json(const nlohmann::json& j) {
  Hyperparams h;
  h.svm_lambda = j.at("svm_lambda");
  h.svm_epochs = j.at("svm_epochs");
  h.lr_lambda = j.at("lr_lambda");
  h.lr_epochs = j.at("lr_epochs");
  h.lr_step = j.at("lr_step");
  h.dt_min_leaf = j.at("dt_min_leaf");
  h.rf_trees = j.at("rf_trees");
  h.bagging_trees = j.at("bagging_trees");
  h.ensemble_min_leaf = j.at("ensemble_min_leaf");
  return h;
}

Split split_train_test(const std::vector<bool>& labels, const SplitConfig& config) {
  if (!(config.train_fraction > 0 && config.train_fraction < 1))
    throw Error(ErrorKind::invalid_argument, "train_fraction must lie in (0, 1)");
  if (labels.size() < 2) throw Error(ErrorKind::invalid_argument, "need at least two examples to split");
  const auto pos = std::count(labels.begin(), labels.end(), true);
  if (pos == 0 || pos == static_cast<std::ptrdiff_t>(labels.size()))
    throw Error(ErrorKind::degenerate_labels, "examples hold a single class");
  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(config.seed);
  rng.shuffle(order.begin(), order.end());
  const auto cut = static_cast<std::size_t>(std::ceil(config.train_fraction * static_cast<double>(labels.size()) - 1e-9));
  Split s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(cut));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(cut), order.end());
  return s;
}

Split split_train_test(std::span<const FeatureVector> examples, const SplitConfig& config) {
  std::vector<bool> labels;
  for (const auto& fv : examples) labels.push_back(label_of(fv));
  return split_train_test(labels, config);
}

const TreeNode& Tree::leaf_for(const FeatureVector& fv) const {
  const TreeNode* n = &nodes.at(0);
  while (n->feature >= 0) n = &nodes[fv.weight(static_cast<std::uint32_t>(n->feature)) > 0 ? n->present : n->absent];
  return *n;
}

Tree grow_tree(std::span<const FeatureVector> data, std::span<const std::size_t> sample, std::size_t min_leaf,
               std::size_t features_per_split, std::uint64_t seed) {
  Grower g{data, std::max<std::size_t>(min_leaf, 1), features_per_split, Rng(seed), {}};
  g.grow(std::vector<std::size_t>(sample.begin(), sample.end()));
  return std::move(g.tree);
}

LogisticObjective logistic_objective(const std::vector<double>& weights, double bias, std::span<const FeatureVector> data,
                                     double lambda) {
  LogisticObjective obj;
  obj.gradient.assign(weights.size() + 1, 0.0);
  const auto n = static_cast<double>(data.size());
  for (const auto& fv : data) {
    const double z = dot(weights, fv) + bias;
    const double y = label_of(fv) ? 1.0 : 0.0;
    obj.loss += softplus(z) - y * z;
    const double r = (sigmoid(z) - y) / n;
    for (const auto& [i, x] : fv.weights)
      if (i < weights.size()) obj.gradient[i] += r * x;
    obj.gradient[weights.size()] += r;
  }
  obj.loss /= n;
  double sq = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    sq += weights[i] * weights[i];
    obj.gradient[i] += lambda * weights[i];
  }
  obj.loss += lambda / 2 * sq;
  return obj;
}

ClassifierModel train(Algorithm algorithm, std::span<const FeatureVector> train_set, std::size_t num_features,
                      const Hyperparams& hyperparams, std::uint64_t seed) {
  hyperparams.validate();
  require_both_classes(train_set);
  ClassifierModel m;
  m.algorithm_ = algorithm;
  m.hyperparams_ = hyperparams;
  m.num_features_ = num_features;
  m.seed_ = seed;
  m.train_fingerprint_ = training_fingerprint(algorithm, train_set, num_features, hyperparams, seed);

  std::vector<std::size_t> all(train_set.size());
  std::iota(all.begin(), all.end(), 0);
  switch (algorithm) {
    case Algorithm::svm:
      train_svm(train_set, num_features, hyperparams, seed, m.weights_, m.bias_);
      break;
    case Algorithm::lr:
      train_lr(train_set, num_features, hyperparams, m.weights_, m.bias_);
      break;
    case Algorithm::bayes: {
      std::array<std::vector<double>, 2> mass{std::vector<double>(num_features, 0.0), std::vector<double>(num_features, 0.0)};
      std::array<double, 2> total{0, 0};
      std::array<double, 2> docs{0, 0};
      for (const auto& fv : train_set) {
        const int y = label_of(fv) ? 1 : 0;
        docs[y] += 1;
        for (const auto& [i, x] : fv.weights)
          if (i < num_features) {
            mass[y][i] += x;
            total[y] += x;
          }
      }
      const auto features = static_cast<double>(num_features);
      for (int y = 0; y < 2; ++y) {
        m.log_prior_[y] = std::log(docs[y] / static_cast<double>(train_set.size()));
        m.log_likelihood_[y].resize(num_features);
        for (std::size_t i = 0; i < num_features; ++i)
          m.log_likelihood_[y][i] = std::log((mass[y][i] + 1) / (total[y] + features));
      }
      m.weights_.resize(num_features);
      for (std::size_t i = 0; i < num_features; ++i) m.weights_[i] = m.log_likelihood_[1][i] - m.log_likelihood_[0][i];
      m.bias_ = m.log_prior_[1] - m.log_prior_[0];
      break;
    }
    case Algorithm::dt:
      m.trees_.push_back(grow_tree(train_set, all, hyperparams.dt_min_leaf, 0, mix_seed(seed, 0)));
      break;
    case Algorithm::rf:
    case Algorithm::bagging: {
      const bool forest = algorithm == Algorithm::rf;
      const std::uint32_t count = forest ? hyperparams.rf_trees : hyperparams.bagging_trees;
      const auto per_split =
          forest ? static_cast<std::size_t>(std::max(1.0, std::floor(std::sqrt(count_present_features(train_set))))) : 0;
      for (std::uint32_t t = 0; t < count; ++t) {
        Rng rng(mix_seed(seed, 1000 + t));
        std::vector<std::size_t> sample(train_set.size());
        for (auto& s : sample) s = rng.below(train_set.size());
        m.trees_.push_back(grow_tree(train_set, sample, hyperparams.ensemble_min_leaf, per_split, rng.next()));
      }
      break;
    }
  }
  return m;
}

std::array<double, 2> ClassifierModel::posteriors(const FeatureVector& fv) const {
  if (algorithm_ != Algorithm::bayes) throw Error(ErrorKind::invalid_argument, "posteriors are defined for bayes only");
  std::array<double, 2> joint{log_prior_[0], log_prior_[1]};
  for (const auto& [i, x] : fv.weights)
    if (i < num_features_)
      for (int y = 0; y < 2; ++y) joint[y] += x * log_likelihood_[y][i];
  const double top = std::max(joint[0], joint[1]);
  const double e0 = std::exp(joint[0] - top), e1 = std::exp(joint[1] - top);
  return {e0 / (e0 + e1), e1 / (e0 + e1)};
}

std::size_t ClassifierModel::positive_votes(const FeatureVector& fv) const {
  std::size_t votes = 0;
  for (const auto& t : trees_) votes += leaf_label(t.leaf_for(fv));
  return votes;
}

Prediction ClassifierModel::predict(const FeatureVector& fv) const {
  switch (algorithm_) {
    case Algorithm::svm:
    case Algorithm::lr:
    case Algorithm::bayes: {
      const double s = dot(weights_, fv) + bias_;
      return {s > 0, s};
    }
    case Algorithm::dt: {
      const auto& leaf = trees_.at(0).leaf_for(fv);
      const double p = static_cast<double>(leaf.positives) / (leaf.positives + leaf.negatives);
      return {leaf_label(leaf), p};
    }
    case Algorithm::rf:
    case Algorithm::bagging: {
      const double fraction = static_cast<double>(positive_votes(fv)) / static_cast<double>(trees_.size());
      return {fraction > 0.5, fraction};
    }
  }
  return {};
}

std::vector<Prediction> predict_batch(const ClassifierModel& model, std::span<const FeatureVector> batch) {
  std::vector<Prediction> out;
  out.reserve(batch.size());
  for (const auto& fv : batch) out.push_back(model.predict(fv));
  return out;
}

nlohmann::ordered_json ClassifierModel::to_json() const {
  nlohmann::ordered_json j;
  j["format"] = "archminer-model/1";
  j["algorithm"] = to_string(algorithm_);
  j["hyperparams"] = hyperparams_.to_json();
  j["num_features"] = num_features_;
  j["seed"] = seed_;
  j["train_fingerprint"] = train_fingerprint_;
  switch (algorithm_) {
    case Algorithm::svm:
    case Algorithm::lr:
      j["weights"] = weights_;
      j["bias"] = bias_;
      break;
    case Algorithm::bayes:
      j["log_prior"] = log_prior_;
      j["log_likelihood"] = log_likelihood_;
      break;
    default:
      j["trees"] = nlohmann::ordered_json::array();
      for (const auto& t : trees_) j["trees"].push_back(tree_json(t));
  }
  return j;
}

ClassifierModel ClassifierModel::from_json(const nlohmann::json& j) {
  ClassifierModel m;
  try {
    if (j.at("format") != "archminer-model/1") throw Error(ErrorKind::malformed_input, "unsupported model format");
    const auto algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
    if (!algorithm) throw Error(ErrorKind::malformed_input, "unknown algorithm in model file");
    m.algorithm_ = *algorithm;
    m.hyperparams_ = Hyperparams::from_json(j.at("hyperparams"));
    m.num_features_ = j.at("num_features");
    m.seed_ = j.at("seed");
    m.train_fingerprint_ = j.at("train_fingerprint");
    switch (m.algorithm_) {
      case Algorithm::svm:
      case Algorithm::lr:
        m.weights_ = j.at("weights").get<std::vector<double>>();
        m.bias_ = j.at("bias");
        if (m.weights_.size() != m.num_features_) throw Error(ErrorKind::malformed_input, "weight vector length mismatch");
        break;
      case Algorithm::bayes:
        m.log_prior_ = j.at("log_prior").get<std::array<double, 2>>();
        m.log_likelihood_ = j.at("log_likelihood").get<std::array<std::vector<double>, 2>>();
        for (const auto& ll : m.log_likelihood_)
          if (ll.size() != m.num_features_) throw Error(ErrorKind::malformed_input, "likelihood table length mismatch");
        m.weights_.resize(m.num_features_);
        for (std::size_t i = 0; i < m.num_features_; ++i)
          m.weights_[i] = m.log_likelihood_[1][i] - m.log_likelihood_[0][i];
        m.bias_ = m.log_prior_[1] - m.log_prior_[0];
        break;
      default:
        for (const auto& t : j.at("trees")) m.trees_.push_back(tree_from_json(t));
        if (m.trees_.empty()) throw Error(ErrorKind::malformed_input, "model has no trees");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::malformed_input, std::string("model file: ") + e.what());
  }
  return m;
}

}  // namespace archminer
