#pragma once

// Test-only reference computations. These deliberately avoid the library's
// own code paths so that they can serve as independent oracles.

#include <cstddef>
#include <string>
#include <vector>

namespace archminer::testing {

// Base-2 entropy of a class distribution given as counts.
double entropy_of_counts(const std::vector<std::size_t>& counts);

// Gain ratio of a binary presence split computed by building both partitions
// explicitly, members listed one by one.
double brute_force_gain_ratio(const std::vector<bool>& present, const std::vector<bool>& labels);

}  // namespace archminer::testing
