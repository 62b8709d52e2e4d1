#pragma once

// Small hand-built pipelines shared by unit and acceptance tests.

#include <vector>

#include "archminer/dictionary.hpp"
#include "archminer/gain_ratio.hpp"

namespace archminer::testing {

// A seed "timeout" (filed under Time out), a planted unseen term "loadtime"
// whose cosine to "timeout" is `cosine`, one corpus post mentioning both, and
// labelled docs in which "loadtime" appears per `presence`.
struct LoadtimeFixture {
  SeedLexicon seeds;
  EmbeddingModel model;
  std::vector<TokenizedDoc> corpus;
  std::vector<TokenizedDoc> labeled;
  std::vector<bool> labels;
  Vectorizer vectorizer;
};

LoadtimeFixture make_loadtime_fixture(double cosine, const PresenceCounts& presence);

// 18 positives and 15 negatives with "loadtime" in 11 positives only:
// gain ratio 0.42735.
PresenceCounts loadtime_presence();
// 10 positives and 11 negatives, present in 8 and 2: gain ratio 0.29677.
PresenceCounts weak_presence();

}  // namespace archminer::testing
