#include "archminer/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "archminer/error.hpp"
#include "archminer/fingerprint.hpp"
#include "archminer/gain_ratio.hpp"

namespace archminer {

double FeatureVector::weight(std::uint32_t index) const {
  const auto it = std::lower_bound(weights.begin(), weights.end(), index,
                                   [](const auto& p, std::uint32_t i) { return p.first < i; });
  return it != weights.end() && it->first == index ? it->second : 0.0;
}

std::optional<std::uint32_t> Vectorizer::index_of(const std::string& term) const {
  const auto it = index_.find(term);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Vectorizer::selected_count() const {
  return static_cast<std::size_t>(std::count(selected_.begin(), selected_.end(), true));
}

void Vectorizer::rebuild_index() {
  index_.clear();
  for (std::uint32_t i = 0; i < terms_.size(); ++i) index_.emplace(terms_[i], i);
}

FeatureVector Vectorizer::transform(const TokenizedDoc& doc) const {
  FeatureVector fv;
  if (doc.length() == 0) return fv;
  const auto len = static_cast<double>(doc.length());
  for (const auto& [term, count] : doc.token_counts) {
    const auto i = index_of(term);
    if (!i || !selected_[*i]) continue;
    const double w = count / len * idf_[*i];
    if (w > 0) fv.weights.emplace_back(*i, w);
  }
  std::sort(fv.weights.begin(), fv.weights.end());
  return fv;
}

std::vector<std::pair<std::string, double>> Vectorizer::tfidf(const TokenizedDoc& doc) const {
  std::vector<std::pair<std::string, double>> out;
  const auto len = static_cast<double>(doc.length());
  for (const auto& [term, count] : doc.token_counts) {
    const auto i = index_of(term);
    out.emplace_back(term, i ? count / len * idf_[*i] : 0.0);
  }
  return out;
}

Vectorizer fit_tfidf(std::span<const TokenizedDoc> docs) {
  if (docs.empty()) throw Error(ErrorKind::empty_corpus, "cannot fit TF-IDF on zero documents");
  std::map<std::string, std::size_t> df;
  for (const auto& doc : docs)
    for (const auto& [term, count] : doc.token_counts) ++df[term];
  Vectorizer v;
  v.doc_count_ = docs.size();
  const auto n = static_cast<double>(docs.size());
  for (const auto& [term, count] : df) {
    v.terms_.push_back(term);
    v.idf_.push_back(std::log(n / static_cast<double>(count)));
  }
  v.selected_.assign(v.terms_.size(), true);
  v.rebuild_index();
  return v;
}

Vectorizer select_features(const Vectorizer& v, std::span<const TokenizedDoc> docs, const std::vector<bool>& labels,
                           const Selection& selection) {
  const auto counts = presence_counts(docs, labels);
  const auto positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), true));
  std::vector<std::pair<double, std::uint32_t>> ranked;
  ranked.reserve(v.size());
  for (std::uint32_t i = 0; i < v.size(); ++i) {
    const auto it = counts.find(v.terms_[i]);
    PresenceCounts c = it != counts.end() ? it->second : PresenceCounts{};
    c.positives = positives;
    c.negatives = labels.size() - positives;
    ranked.emplace_back(gain_ratio(c), i);
  }
  // Terms are stored lexicographically, so index order is the term tie-break
  // for fitted terms. Appended dictionary terms are forced in anyway.
  std::sort(ranked.begin(), ranked.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return v.terms_[a.second] < v.terms_[b.second];
  });
  Vectorizer out = v;
  out.selected_.assign(v.size(), false);
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    const bool keep = selection.top_k ? r < *selection.top_k : ranked[r].first > selection.threshold;
    if (keep) out.selected_[ranked[r].second] = true;
  }
  for (const auto& term : v.dictionary_terms_) out.selected_[*v.index_of(term)] = true;
  return out;
}

Vectorizer augment_with_dictionary(const Vectorizer& v, const std::set<std::string>& terms) {
  Vectorizer out = v;
  for (const auto& term : terms) {
    if (!out.index_of(term)) {
      out.index_.emplace(term, static_cast<std::uint32_t>(out.terms_.size()));
      out.terms_.push_back(term);
      out.idf_.push_back(std::log(static_cast<double>(v.doc_count_) + 1.0));
      out.selected_.push_back(true);
    }
    out.selected_[*out.index_of(term)] = true;
    out.dictionary_terms_.insert(term);
  }
  return out;
}

nlohmann::ordered_json Vectorizer::to_json() const {
  nlohmann::ordered_json j;
  j["format"] = "archminer-vectorizer/1";
  j["doc_count"] = doc_count_;
  j["terms"] = terms_;
  j["idf"] = idf_;
  std::vector<int> mask(selected_.begin(), selected_.end());
  j["selected"] = mask;
  j["dictionary_terms"] = dictionary_terms_;
  return j;
}

Vectorizer Vectorizer::from_json(const nlohmann::json& j) {
  Vectorizer v;
  try {
    v.doc_count_ = j.at("doc_count");
    v.terms_ = j.at("terms").get<std::vector<std::string>>();
    v.idf_ = j.at("idf").get<std::vector<double>>();
    for (int b : j.at("selected").get<std::vector<int>>()) v.selected_.push_back(b != 0);
    v.dictionary_terms_ = j.at("dictionary_terms").get<std::set<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::malformed_input, std::string("vectorizer: ") + e.what());
  }
  if (v.idf_.size() != v.terms_.size() || v.selected_.size() != v.terms_.size())
    throw Error(ErrorKind::malformed_input, "vectorizer arrays differ in length");
  v.rebuild_index();
  if (v.index_.size() != v.terms_.size()) throw Error(ErrorKind::malformed_input, "vectorizer has duplicate terms");
  for (const auto& t : v.dictionary_terms_)
    if (!v.index_of(t)) throw Error(ErrorKind::malformed_input, "dictionary term " + t + " missing from vocabulary");
  return v;
}

std::string Vectorizer::fingerprint() const { return fingerprint_of(to_json().dump()); }

nlohmann::ordered_json to_json(const FeatureVector& fv) {
  nlohmann::ordered_json j;
  j["weights"] = fv.weights;
  j["label"] = fv.label ? nlohmann::ordered_json(*fv.label) : nlohmann::ordered_json(nullptr);
  return j;
}

FeatureVector feature_vector_from_json(const nlohmann::json& j) {
  FeatureVector fv;
  fv.weights = j.at("weights").get<std::vector<std::pair<std::uint32_t, double>>>();
  if (!j.at("label").is_null()) fv.label = j.at("label").get<bool>();
  return fv;
}

}  // namespace archminer
