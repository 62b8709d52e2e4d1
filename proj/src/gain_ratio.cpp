#include "archminer/gain_ratio.hpp"

#include <algorithm>
#include <cmath>

#include "archminer/error.hpp"

namespace archminer {
namespace {

double binary_entropy(double a, double b) {
  const double n = a + b;
  if (n == 0) return 0;
  double h = 0;
  for (double c : {a, b})
    if (c > 0) h -= c / n * std::log2(c / n);
  return h;
}

}  // namespace

double gain_ratio(const PresenceCounts& c) {
  const auto pos = static_cast<double>(c.positives);
  const auto neg = static_cast<double>(c.negatives);
  const auto pp = static_cast<double>(c.positive_present);
  const auto np = static_cast<double>(c.negative_present);
  const double n = pos + neg;
  const double present = pp + np;
  const double absent = n - present;
  const double split_info = binary_entropy(present, absent);
  if (n == 0 || split_info == 0) return 0;
  const double conditional =
      present / n * binary_entropy(pp, np) + absent / n * binary_entropy(pos - pp, neg - np);
  return std::clamp((binary_entropy(pos, neg) - conditional) / split_info, 0.0, 1.0);
}

void check_labels(std::size_t docs, const std::vector<bool>& labels) {
  if (docs != labels.size())
    throw Error(ErrorKind::length_mismatch,
                std::to_string(docs) + " docs but " + std::to_string(labels.size()) + " labels");
  if (docs < 2) throw Error(ErrorKind::invalid_argument, "gain ratio needs at least two labelled docs");
  const auto positives = std::count(labels.begin(), labels.end(), true);
  if (positives == 0 || positives == static_cast<std::ptrdiff_t>(labels.size()))
    throw Error(ErrorKind::degenerate_labels, "labels contain a single class");
}

double gain_ratio(const std::string& term, std::span<const TokenizedDoc> docs, const std::vector<bool>& labels) {
  check_labels(docs.size(), labels);
  PresenceCounts c;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const bool present = docs[i].token_counts.count(term) != 0;
    if (labels[i]) {
      ++c.positives;
      c.positive_present += present;
    } else {
      ++c.negatives;
      c.negative_present += present;
    }
  }
  return gain_ratio(c);
}

std::map<std::string, PresenceCounts> presence_counts(std::span<const TokenizedDoc> docs, const std::vector<bool>& labels) {
  check_labels(docs.size(), labels);
  const auto positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), true));
  const auto negatives = labels.size() - positives;
  std::map<std::string, PresenceCounts> out;
  for (std::size_t i = 0; i < docs.size(); ++i)
    for (const auto& [term, count] : docs[i].token_counts) {
      auto& c = out[term];
      (labels[i] ? c.positive_present : c.negative_present) += 1;
    }
  for (auto& [term, c] : out) {
    c.positives = positives;
    c.negatives = negatives;
  }
  return out;
}

}  // namespace archminer
