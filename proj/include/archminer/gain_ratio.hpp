#pragma once

// Information gain ratio of a binary term-presence split over labelled docs.

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "archminer/preprocess.hpp"

namespace archminer {

struct PresenceCounts {
  std::size_t positive_present = 0;
  std::size_t negative_present = 0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

// Base-2 information gain divided by split information; 0 when the term is
// present in all docs or in none.
double gain_ratio(const PresenceCounts& counts);

// Throws Error(length_mismatch) for differing lengths, Error(invalid_argument)
// for fewer than two docs and Error(degenerate_labels) when one class is absent.
void check_labels(std::size_t docs, const std::vector<bool>& labels);

double gain_ratio(const std::string& term, std::span<const TokenizedDoc> docs, const std::vector<bool>& labels);

// Presence counts for every term that occurs in `docs`.
std::map<std::string, PresenceCounts> presence_counts(std::span<const TokenizedDoc> docs, const std::vector<bool>& labels);

}  // namespace archminer
