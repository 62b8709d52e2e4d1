#pragma once

// Seeded synthetic corpora for statistical tests.

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "archminer/corpus.hpp"
#include "archminer/features.hpp"
#include "archminer/preprocess.hpp"

namespace archminer::testing {

struct TwoTopicCorpus {
  std::vector<std::string> topic_a;
  std::vector<std::string> topic_b;
  std::vector<TokenizedDoc> docs;
};

// `per_topic` sentences drawn from each of two disjoint vocabularies.
TwoTopicCorpus two_topic_corpus(std::size_t per_topic, std::uint64_t seed);

// Threads built from the seed lexicon's tactic and quality phrases
// (positives) and generic programming discussion (negatives). A share of the
// negatives mention a lone quality or tactic phrase. Threads are shuffled,
// numbered from 1 and carry an answer, a positive score and the
// software-architecture tag.
struct QaAtCorpus {
  std::vector<Thread> threads;
  std::vector<bool> labels;
};

QaAtCorpus qa_at_corpus(std::size_t planted, std::size_t distractors, std::uint64_t seed);

// Stack Exchange Posts.xml rendering of the threads.
std::string posts_xml(const std::vector<Thread>& threads);
// "post_id,label" CSV with a header row.
std::string labels_csv(const QaAtCorpus& corpus);

// Training positives mostly use seed terms and sometimes their synonyms;
// test positives use the synonyms only. The synonyms are too rare to survive
// the tight feature budget in `selection`, so only dictionary augmentation
// makes them visible to a classifier.
struct SynonymShiftFixture {
  std::vector<TokenizedDoc> train_docs;
  std::vector<bool> train_labels;
  std::vector<TokenizedDoc> test_docs;
  std::vector<bool> test_labels;
  std::set<std::string> seed_terms;
  std::set<std::string> expanded_terms;
  Selection selection;
};

SynonymShiftFixture synonym_shift_fixture(std::uint64_t seed);

}  // namespace archminer::testing
