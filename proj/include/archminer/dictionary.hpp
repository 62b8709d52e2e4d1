#pragma once

// Seed-driven dictionary expansion into a semantic network of terms.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "archminer/embedding.hpp"
#include "archminer/features.hpp"
#include "archminer/lexicon.hpp"

namespace archminer {

enum class Origin { seed, expanded };

std::string_view to_string(Origin origin) noexcept;

struct DictionaryEntry {
  double gain_ratio = 0;
  Origin origin = Origin::seed;
  std::uint32_t iteration_added = 0;

  bool operator==(const DictionaryEntry&) const = default;
};

struct Edge {
  std::string a;  // a < b
  std::string b;
  double sim = 0;

  bool operator==(const Edge&) const = default;
};

class Dictionary {
 public:
  // Throws Error(invalid_argument) on a duplicate term, an edge to a missing
  // entry, or a seed entry added after iteration 0.
  void add_entry(const std::string& term, const DictionaryEntry& entry);
  void add_edge(const std::string& x, const std::string& y, double sim);

  bool contains(const std::string& term) const { return entries_.count(term) != 0; }
  const std::map<std::string, DictionaryEntry>& entries() const noexcept { return entries_; }
  // Sorted by (a, b).
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  std::set<std::string> terms() const;
  std::set<std::string> expanded_terms() const;

  nlohmann::ordered_json to_json() const;
  static Dictionary from_json(const nlohmann::json& j);
  std::string fingerprint() const;

  bool operator==(const Dictionary&) const = default;

 private:
  std::map<std::string, DictionaryEntry> entries_;
  std::vector<Edge> edges_;
};

struct WeightedDoc {
  TokenizedDoc doc;
  // One weight per distinct doc token, summing to 1.
  std::vector<std::pair<std::string, double>> weights;
};

// Normalised TF-IDF weights. When every TF-IDF weight is 0 the raw term
// frequencies are used instead. Throws Error(empty_document).
WeightedDoc weight_doc(const TokenizedDoc& doc, const Vectorizer& vectorizer);

// Sum of weight * sim(doc term, t); out-of-vocabulary doc terms contribute 0.
// Throws Error(unknown_term) when t has no vector.
double post_term_similarity(const WeightedDoc& wdoc, const std::string& t, const EmbeddingModel& model);

// floor(theta * doc length).
std::size_t candidate_count(const TokenizedDoc& doc, double theta);

struct ExpansionConfig {
  double sim_threshold = 0.35;
  double gain_ratio_threshold = 0.300;
  double theta = 0.1;
  std::uint32_t max_iterations = 10;

  void validate() const;
};

struct ExpansionIteration {
  std::uint32_t iteration = 0;
  std::size_t candidates = 0;
  std::vector<std::string> admitted;
};

struct ExpansionResult {
  Dictionary dictionary;
  std::vector<ExpansionIteration> iterations;
};

// Seeds enter at iteration 0. Each iteration harvests, from every corpus doc,
// its top-N unseen terms by post similarity, then admits a candidate when its
// best similarity to an existing entry and its gain ratio over the labelled
// docs both exceed their thresholds. Stops when nothing is admitted.
ExpansionResult expand_dictionary_traced(const SeedLexicon& seeds, const EmbeddingModel& model,
                                         std::span<const TokenizedDoc> corpus_docs,
                                         std::span<const TokenizedDoc> labeled_docs, const std::vector<bool>& labels,
                                         const Vectorizer& vectorizer, const ExpansionConfig& config);

Dictionary expand_dictionary(const SeedLexicon& seeds, const EmbeddingModel& model,
                             std::span<const TokenizedDoc> corpus_docs, std::span<const TokenizedDoc> labeled_docs,
                             const std::vector<bool>& labels, const Vectorizer& vectorizer,
                             const ExpansionConfig& config);

// Expanded entries by gain ratio descending, ties by term.
std::vector<std::pair<std::string, double>> rank_unseen_terms(const Dictionary& dict, std::size_t k);

enum class NetworkFormat { gexf, dot, json };

std::optional<NetworkFormat> parse_network_format(std::string_view name) noexcept;
std::string export_network(const Dictionary& dict, NetworkFormat format);
// Reads a GEXF document written by export_network.
Dictionary import_gexf(std::string_view text);

// Force-includes every dictionary term as a feature.
inline Vectorizer augment_with_dictionary(const Vectorizer& v, const Dictionary& dict) {
  return augment_with_dictionary(v, dict.terms());
}

}  // namespace archminer
