#pragma once

// TF-IDF vectorization with gain-ratio feature selection and forced
// inclusion of dictionary terms.

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "archminer/preprocess.hpp"

namespace archminer {

struct FeatureVector {
  // (feature index, weight) pairs sorted by index; weights are positive.
  std::vector<std::pair<std::uint32_t, double>> weights;
  std::optional<bool> label;

  double weight(std::uint32_t index) const;
  bool operator==(const FeatureVector&) const = default;
};

struct Selection {
  // Keep the top_k terms by gain ratio when set; otherwise terms whose gain
  // ratio exceeds `threshold`.
  std::optional<std::size_t> top_k = 2000;
  double threshold = 0.0;
};

class Vectorizer {
 public:
  Vectorizer() = default;

  std::size_t size() const noexcept { return terms_.size(); }
  std::size_t doc_count() const noexcept { return doc_count_; }
  const std::vector<std::string>& terms() const noexcept { return terms_; }
  std::optional<std::uint32_t> index_of(const std::string& term) const;
  double idf(std::uint32_t index) const { return idf_.at(index); }
  const std::vector<double>& idf() const noexcept { return idf_; }
  bool selected(std::uint32_t index) const { return selected_.at(index); }
  const std::vector<bool>& selected() const noexcept { return selected_; }
  std::size_t selected_count() const;
  const std::set<std::string>& dictionary_terms() const noexcept { return dictionary_terms_; }

  // tf/len * idf for every selected or dictionary term of the doc.
  FeatureVector transform(const TokenizedDoc& doc) const;
  // tf/len * idf for every distinct doc token, selection ignored; tokens
  // outside the vocabulary weigh 0.
  std::vector<std::pair<std::string, double>> tfidf(const TokenizedDoc& doc) const;

  nlohmann::ordered_json to_json() const;
  static Vectorizer from_json(const nlohmann::json& j);
  std::string fingerprint() const;

  bool operator==(const Vectorizer& other) const {
    return terms_ == other.terms_ && idf_ == other.idf_ && selected_ == other.selected_ &&
           dictionary_terms_ == other.dictionary_terms_ && doc_count_ == other.doc_count_;
  }

 private:
  friend Vectorizer fit_tfidf(std::span<const TokenizedDoc> docs);
  friend Vectorizer select_features(const Vectorizer&, std::span<const TokenizedDoc>, const std::vector<bool>&,
                                    const Selection&);
  friend Vectorizer augment_with_dictionary(const Vectorizer&, const std::set<std::string>&);

  void rebuild_index();

  std::vector<std::string> terms_;
  std::unordered_map<std::string, std::uint32_t> index_;
  std::vector<double> idf_;
  std::vector<bool> selected_;
  std::set<std::string> dictionary_terms_;
  std::size_t doc_count_ = 0;
};

// Vocabulary in lexicographic order, idf = ln(N / df), every term selected.
// Throws Error(empty_corpus).
Vectorizer fit_tfidf(std::span<const TokenizedDoc> docs);

// Gain ratio ranking over the labelled docs, ties broken by term. Dictionary
// terms stay selected. Throws Error(degenerate_labels).
Vectorizer select_features(const Vectorizer& v, std::span<const TokenizedDoc> docs, const std::vector<bool>& labels,
                           const Selection& selection);

// Appends absent terms with idf ln(N + 1) and force-selects every given term.
// Existing feature indices are unchanged.
Vectorizer augment_with_dictionary(const Vectorizer& v, const std::set<std::string>& terms);

nlohmann::ordered_json to_json(const FeatureVector& fv);
FeatureVector feature_vector_from_json(const nlohmann::json& j);

}  // namespace archminer
