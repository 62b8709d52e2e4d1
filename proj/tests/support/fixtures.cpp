#include "fixtures.hpp"

#include <cmath>

namespace archminer::testing {

PresenceCounts loadtime_presence() { return {11, 0, 18, 15}; }
PresenceCounts weak_presence() { return {8, 2, 10, 11}; }

LoadtimeFixture make_loadtime_fixture(double cosine, const PresenceCounts& presence) {
  const auto stops = StopList::shipped();
  const auto c = static_cast<float>(cosine);
  LoadtimeFixture f{
      SeedLexicon::from_terms({{"Time out", {"timeout"}}}, {}, stops),
      EmbeddingModel::from_vectors({"timeout", "loadtime", "button"},
                                   {{1, 0, 0}, {c, std::sqrt(1 - c * c), 0}, {0, 0, 1}}),
      {},
      {},
      {},
      {}};
  std::vector<std::string> post;
  for (int i = 0; i < 5; ++i) {
    post.push_back("timeout");
    post.push_back("loadtime");
  }
  f.corpus.push_back(TokenizedDoc::from_tokens(1, post));
  f.corpus.push_back(TokenizedDoc::from_tokens(2, {"button", "button", "timeout"}));

  PostId id = 100;
  auto add = [&](bool label, std::size_t count, bool with_term) {
    for (std::size_t i = 0; i < count; ++i) {
      std::vector<std::string> tokens{label ? "timeout" : "button"};
      if (with_term) tokens.push_back("loadtime");
      f.labeled.push_back(TokenizedDoc::from_tokens(id++, tokens));
      f.labels.push_back(label);
    }
  };
  add(true, presence.positive_present, true);
  add(true, presence.positives - presence.positive_present, false);
  add(false, presence.negative_present, true);
  add(false, presence.negatives - presence.negative_present, false);
  f.vectorizer = fit_tfidf(f.corpus);
  return f;
}

}  // namespace archminer::testing
