#pragma once

// Skip-gram word vectors with negative sampling, and cosine queries over them.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "archminer/preprocess.hpp"

namespace archminer {

struct EmbeddingConfig {
  std::uint32_t dim = 100;
  std::uint32_t window = 5;
  std::uint32_t negative_samples = 5;
  std::uint32_t epochs = 15;
  std::uint32_t min_count = 2;
  double initial_learning_rate = 0.025;
  // Frequent-word subsampling threshold; 0 disables it.
  double subsample = 0.0;
  std::uint64_t seed = 1;
  // 1 is the reproducible mode. More workers update shared vectors without
  // locks and give up bitwise reproducibility.
  std::uint32_t threads = 1;

  void validate() const;
  bool operator==(const EmbeddingConfig&) const = default;
};

class EmbeddingModel {
 public:
  EmbeddingModel() = default;

  // Test hook: a model from hand-set vectors. Terms must be distinct and all
  // vectors the same non-zero length.
  static EmbeddingModel from_vectors(std::vector<std::string> terms, const std::vector<std::vector<float>>& vectors);

  std::size_t size() const noexcept { return terms_.size(); }
  std::uint32_t dim() const noexcept { return dim_; }
  bool contains(const std::string& term) const { return index_.count(term) != 0; }
  // Throws Error(unknown_term).
  std::size_t index_of(const std::string& term) const;
  const std::string& term(std::size_t index) const { return terms_.at(index); }
  const std::vector<std::string>& terms() const noexcept { return terms_; }
  std::span<const float> vector(std::size_t index) const;

  // Cosine of the two vectors. Throws Error(unknown_term).
  double similarity(const std::string& a, const std::string& b) const;
  double similarity(std::size_t a, std::size_t b) const;

  // Top-k other terms by similarity, ties broken by term order.
  std::vector<std::pair<std::string, double>> nearest(const std::string& term, std::size_t k) const;

  // Test hook: multiplies one stored vector by `factor`.
  void scale_vector(const std::string& term, float factor);

  const EmbeddingConfig& config() const noexcept { return config_; }
  const std::string& corpus_fingerprint() const noexcept { return corpus_fingerprint_; }
  std::string fingerprint() const;

  void write_binary(std::ostream& out) const;
  static EmbeddingModel read_binary(std::istream& in);
  // First line "<count> <dim>", then one "<term> <v1> ... <vd>" line per term.
  void write_text(std::ostream& out) const;
  static EmbeddingModel read_text(std::istream& in);

  bool operator==(const EmbeddingModel& other) const {
    return terms_ == other.terms_ && dim_ == other.dim_ && vectors_ == other.vectors_;
  }

 private:
  friend EmbeddingModel train_skipgram(std::span<const TokenizedDoc>, const EmbeddingConfig&);

  void rebuild_index();
  double norm(std::size_t index) const;

  std::vector<std::string> terms_;
  std::unordered_map<std::string, std::size_t> index_;
  std::uint32_t dim_ = 0;
  std::vector<float> vectors_;  // row-major |V| x dim
  EmbeddingConfig config_;
  std::string corpus_fingerprint_;
};

// Vocabulary is every token seen at least min_count times, ordered by
// descending count then term. Throws Error(empty_corpus) for no docs and
// Error(empty_vocabulary) when nothing meets min_count.
EmbeddingModel train_skipgram(std::span<const TokenizedDoc> docs, const EmbeddingConfig& config);

std::string corpus_fingerprint(std::span<const TokenizedDoc> docs);

}  // namespace archminer
