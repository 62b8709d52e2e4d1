#include "archminer/relations.hpp"

#include <gtest/gtest.h>

#include <sstream>

#include "archminer/error.hpp"
#include "archminer/preprocess.hpp"
#include "archminer/random.hpp"

namespace archminer {
namespace {

const SeedLexicon& shipped_seeds() {
  static const SeedLexicon seeds = SeedLexicon::shipped(StopList::shipped());
  return seeds;
}

std::vector<QaAtInstance> detect(std::string_view text, const TermMatcher& matcher, PostId id = 1) {
  const auto stems = surface_stems(text);
  return detect_instances(id, stems, matcher);
}

std::set<std::pair<std::string, std::string>> pairs_of(const std::vector<QaAtInstance>& instances) {
  std::set<std::pair<std::string, std::string>> out;
  for (const auto& i : instances) out.emplace(i.at, i.qa);
  return out;
}

QaAtInstance instance(PostId id, std::string at, std::string qa) {
  QaAtInstance i;
  i.post_id = id;
  i.at = std::move(at);
  i.qa = std::move(qa);
  return i;
}

TEST(DetectInstances, HeartbeatAndResponseTime) {
  const TermMatcher matcher(shipped_seeds());
  const auto found = detect("We send a heartbeat and watch the response time.", matcher);
  EXPECT_EQ(pairs_of(found), (std::set<std::pair<std::string, std::string>>{{"Heartbeat", "Performance"}}));
  ASSERT_EQ(found.size(), 1u);
  EXPECT_EQ(found[0].at_evidence.phrase, "heartbeat");
  EXPECT_EQ(found[0].qa_evidence.phrase, "response time");
  EXPECT_EQ(found[0].qa_evidence.offset, 7u);
  EXPECT_EQ(found[0].polarity, Polarity::unspecified);
  EXPECT_EQ(found[0].polarity_source, PolaritySource::none);
}

TEST(DetectInstances, SeveralInstancesPerPost) {
  const TermMatcher matcher(shipped_seeds());
  const auto found = detect("Heartbeat plus a timeout improves reliability.", matcher);
  EXPECT_EQ(pairs_of(found), (std::set<std::pair<std::string, std::string>>{{"Heartbeat", "Reliability"},
                                                                            {"Time out", "Reliability"}}));
}

TEST(DetectInstances, NeedsBothSides) {
  const TermMatcher matcher(shipped_seeds());
  EXPECT_TRUE(detect("A heartbeat and a checkpoint.", matcher).empty());
  EXPECT_TRUE(detect("Nothing relevant here at all.", matcher).empty());
}

TEST(DetectInstances, PhrasesMatchContiguously) {
  const TermMatcher matcher(shipped_seeds());
  EXPECT_TRUE(detect("response of the heartbeat came in time", matcher).empty());
  EXPECT_EQ(detect("the heartbeat time out for usability", matcher).size(), 2u);
}

TEST(DetectInstances, OneInstancePerPairWithRepetitionCount) {
  const TermMatcher matcher(shipped_seeds());
  const auto found = detect("heartbeat heartbeat throughput heartbeat throughput", matcher);
  ASSERT_EQ(found.size(), 1u);
  EXPECT_EQ(found[0].at_evidence.occurrences, 3u);
  EXPECT_EQ(found[0].qa_evidence.occurrences, 2u);
  EXPECT_EQ(found[0].at_evidence.offset, 0u);
}

TEST(DetectInstances, SingleTokenCannotSupplyBothSides) {
  // "action" is a term of both Time out and Performance.
  const TermMatcher matcher(shipped_seeds());
  EXPECT_TRUE(detect("action", matcher).empty());
  EXPECT_EQ(pairs_of(detect("action action", matcher)),
            (std::set<std::pair<std::string, std::string>>{{"Time out", "Performance"}}));
}

TEST(DetectInstances, StableUnderTokenReDerivation) {
  const TermMatcher matcher(shipped_seeds());
  const std::string text = "<p>Our <b>heartbeat</b> &amp; a connection pool cut the response time; security too.</p>";
  EXPECT_EQ(detect(text, matcher), detect(text, matcher));
  Thread t;
  t.question.id = 9;
  t.question.body_html = text;
  EXPECT_EQ(detect_instances(t, matcher), detect(text, matcher, 9));
}

Dictionary network() {
  Dictionary d;
  d.add_entry("heartbeat", {0.5, Origin::seed, 0});
  d.add_entry("throughput", {0.5, Origin::seed, 0});
  d.add_entry("keepal", {0.4, Origin::expanded, 1});
  d.add_entry("latenc", {0.4, Origin::expanded, 1});
  d.add_entry("jitter", {0.4, Origin::expanded, 2});
  d.add_entry("blip", {0.4, Origin::expanded, 1});
  d.add_edge("keepal", "heartbeat", 0.8);
  d.add_edge("keepal", "throughput", 0.5);
  d.add_edge("latenc", "throughput", 0.7);
  d.add_edge("jitter", "latenc", 0.6);
  d.add_edge("jitter", "heartbeat", 0.4);
  d.add_edge("blip", "heartbeat", 0.5);
  d.add_edge("blip", "throughput", 0.5);
  return d;
}

TEST(TermMatcher, ExpandedTermsFollowStrongestEdge) {
  const auto d = network();
  const TermMatcher matcher(shipped_seeds(), &d);
  using M = std::vector<std::pair<Side, std::string>>;
  EXPECT_EQ(matcher.expanded_mapping("keepal"), (M{{Side::tactic, "Heartbeat"}}));
  EXPECT_EQ(matcher.expanded_mapping("latenc"), (M{{Side::quality, "Performance"}}));
  EXPECT_EQ(matcher.expanded_mapping("jitter"), (M{{Side::quality, "Performance"}}));
  EXPECT_TRUE(matcher.expanded_mapping("blip").empty());
  EXPECT_EQ(matcher.ambiguous_terms(), (std::set<std::string>{"blip"}));

  const std::vector<std::string> stems{"keepal", "latenc"};
  EXPECT_EQ(pairs_of(detect_instances(1, stems, matcher)),
            (std::set<std::pair<std::string, std::string>>{{"Heartbeat", "Performance"}}));
  const std::vector<std::string> ambiguous{"blip", "latenc"};
  EXPECT_TRUE(detect_instances(1, ambiguous, matcher).empty());
}

TEST(InstanceKey, RoundTrip) {
  const InstanceKey k{42, "Time out", "Performance"};
  EXPECT_EQ(k.str(), "42:Time out:Performance");
  EXPECT_EQ(InstanceKey::parse(k.str()), k);
  EXPECT_THROW(InstanceKey::parse("x:Time out:Performance"), Error);
  EXPECT_THROW(InstanceKey::parse("1:Time out"), Error);
}

TEST(BuildMatrix, CountsPairs) {
  const std::vector<QaAtInstance> two{instance(1, "Heartbeat", "Performance"), instance(2, "Heartbeat", "Performance")};
  const auto m = build_matrix(two);
  EXPECT_EQ(m.at("Heartbeat", "Performance"), 2u);
  EXPECT_EQ(m.total(), 2u);
  for (const auto& t : tactic_names())
    for (const auto& q : quality_names())
      if (t != "Heartbeat" || q != "Performance") EXPECT_EQ(m.at(t, q), 0u);
  EXPECT_EQ(build_matrix({}).total(), 0u);
}

TEST(BuildMatrix, ConservationOnRandomInstances) {
  Rng rng(5);
  std::vector<QaAtInstance> many;
  for (int i = 0; i < 300; ++i)
    many.push_back(instance(static_cast<PostId>(i), tactic_names()[rng.below(21)], quality_names()[rng.below(8)]));
  EXPECT_EQ(build_matrix(many).total(), many.size());
}

TEST(BuildMatrix, CsvShape) {
  const std::vector<QaAtInstance> one{instance(1, "FIFO", "Usability")};
  const auto csv = build_matrix(one).to_csv();
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line,
            "AT,Performance,Maintainability,Compatibility,Usability,Reliability,Functional Suitability,Security,"
            "Portability");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    if (line.rfind("FIFO,", 0) == 0) EXPECT_EQ(line, "FIFO,0,0,0,1,0,0,0,0");
  }
  EXPECT_EQ(rows, 21u);
}

TEST(InstanceStore, RecordPolarity) {
  InstanceStore store;
  ASSERT_TRUE(store.add(instance(1, "Resource pooling", "Performance")));
  EXPECT_FALSE(store.add(instance(1, "Resource pooling", "Performance")));
  const InstanceKey key{1, "Resource pooling", "Performance"};
  store.record_polarity(key, Polarity::positive, "ann", "t1");
  const auto all = store.instances();
  EXPECT_EQ(tally_ledger(all).cell("Resource pooling", "Performance").positive, 1u);
  EXPECT_EQ(store.get(key).polarity_source, PolaritySource::human);
}

TEST(InstanceStore, ReRecordOverwritesWithHistory) {
  InstanceStore store;
  store.add(instance(3, "Heartbeat", "Security"));
  const InstanceKey key{3, "Heartbeat", "Security"};
  store.record_polarity(key, Polarity::positive, "ann", "t1");
  store.record_polarity(key, Polarity::negative, "ann", "t2");
  const auto all = store.instances();
  const auto cell = tally_ledger(all).cell("Heartbeat", "Security");
  EXPECT_EQ(cell.positive, 0u);
  EXPECT_EQ(cell.negative, 1u);
  ASSERT_EQ(store.history().size(), 2u);
  EXPECT_EQ(store.history()[0].polarity, Polarity::positive);
  EXPECT_EQ(store.history()[1].previous, Polarity::positive);
  EXPECT_EQ(store.history()[1].polarity, Polarity::negative);
}

TEST(InstanceStore, Errors) {
  InstanceStore store;
  store.add(instance(3, "Heartbeat", "Security"));
  try {
    store.record_polarity({4, "Heartbeat", "Security"}, Polarity::positive, "ann", "t");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::unknown_instance);
  }
  EXPECT_THROW(store.record_polarity({3, "Heartbeat", "Security"}, Polarity::unspecified, "ann", "t"), Error);
}

TEST(InstanceStore, PersistenceAndAuditReplay) {
  InstanceStore store;
  store.add(instance(1, "Heartbeat", "Performance"));
  store.add(instance(2, "Time out", "Usability"));
  std::stringstream detections;
  store.write_instances(detections);
  store.record_polarity({1, "Heartbeat", "Performance"}, Polarity::negative, "ann", "t1");
  std::stringstream audit;
  store.write_audit(audit);

  auto back = InstanceStore::read_instances(detections);
  EXPECT_EQ(back.get({1, "Heartbeat", "Performance"}).polarity, Polarity::unspecified);
  back.replay_audit(audit);
  EXPECT_EQ(back.instances(), store.instances());
  EXPECT_EQ(back.history(), store.history());
  EXPECT_EQ(back.instances_for(2).size(), 1u);
}

TEST(InstanceStore, RejectsPolarityWithoutHumanSource) {
  auto j = instance(1, "Heartbeat", "Performance").to_json();
  j["polarity"] = "positive";
  std::istringstream in(j.dump() + "\n");
  EXPECT_THROW(InstanceStore::read_instances(in), Error);
  auto unknown = instance(1, "Teleport", "Performance").to_json();
  std::istringstream in2(unknown.dump() + "\n");
  EXPECT_THROW(InstanceStore::read_instances(in2), Error);
}

std::vector<QaAtInstance> polarized(std::string at, std::string qa, Polarity p, int n, PostId first) {
  std::vector<QaAtInstance> out;
  for (int i = 0; i < n; ++i) {
    auto inst = instance(first + static_cast<PostId>(i), at, qa);
    inst.polarity = p;
    inst.polarity_source = PolaritySource::human;
    out.push_back(inst);
  }
  return out;
}

TEST(TallyLedger, TableCells) {
  auto all = polarized("Time out", "Functional Suitability", Polarity::positive, 10, 1);
  const auto hb = polarized("Heartbeat", "Performance", Polarity::negative, 47, 100);
  all.insert(all.end(), hb.begin(), hb.end());
  const auto ledger = tally_ledger(all);
  EXPECT_EQ(ledger.cell("Time out", "Functional Suitability").render(), "+ (10)");
  EXPECT_EQ(ledger.cell("Heartbeat", "Performance").render(), "− (47)");
  EXPECT_EQ(ledger.cell("FIFO", "Security").render(), "N/A");
  EXPECT_EQ(ledger.polarized_total(), 57u);
}

TEST(TallyLedger, UnpolarizedOnlyIsAllNA) {
  const std::vector<QaAtInstance> plain{instance(1, "Heartbeat", "Performance"), instance(2, "FIFO", "Usability")};
  const auto ledger = tally_ledger(plain);
  EXPECT_TRUE(ledger.cells().empty());
  const auto csv = ledger.to_csv();
  EXPECT_EQ(csv.find('+'), std::string::npos);
  EXPECT_NE(csv.find("Heartbeat,N/A,N/A"), std::string::npos);
}

TEST(TallyLedger, MixedCellsAreFlagged) {
  auto all = polarized("Heartbeat", "Security", Polarity::positive, 3, 1);
  const auto neg = polarized("Heartbeat", "Security", Polarity::negative, 1, 10);
  all.insert(all.end(), neg.begin(), neg.end());
  const auto tie = polarized("FIFO", "Security", Polarity::negative, 2, 20);
  const auto tie_pos = polarized("FIFO", "Security", Polarity::positive, 2, 30);
  all.insert(all.end(), tie.begin(), tie.end());
  all.insert(all.end(), tie_pos.begin(), tie_pos.end());
  const auto ledger = tally_ledger(all);
  EXPECT_EQ(ledger.cell("Heartbeat", "Security").render(), "+ (3)");
  EXPECT_EQ(ledger.cell("FIFO", "Security").render(), "+ (2) / − (2)");
  EXPECT_EQ(ledger.mixed_cells().size(), 2u);
  EXPECT_NE(ledger.to_markdown().find("(mixed)"), std::string::npos);
}

TEST(TallyLedger, SumEqualsPolarizedCount) {
  Rng rng(17);
  std::vector<QaAtInstance> all;
  std::uint64_t human = 0;
  for (int i = 0; i < 200; ++i) {
    auto inst = instance(static_cast<PostId>(i), tactic_names()[rng.below(21)], quality_names()[rng.below(8)]);
    const auto r = rng.below(3);
    if (r < 2) {
      inst.polarity = r == 0 ? Polarity::positive : Polarity::negative;
      inst.polarity_source = PolaritySource::human;
      ++human;
    }
    all.push_back(inst);
  }
  EXPECT_EQ(tally_ledger(all).polarized_total(), human);
}

TEST(LiteratureBaseline, ShippedCanonicalised) {
  const auto b = LiteratureBaseline::shipped();
  EXPECT_EQ(b.qualities().size(), 8u);
  EXPECT_EQ(b.sign("Heartbeat", "Performance"), -1);
  EXPECT_EQ(b.sign("FIFO", "Performance"), 1);
  EXPECT_EQ(b.sign("Redundancy replication", "Reliability"), 1);
  EXPECT_EQ(b.sign("Time stamp", "Performance"), 0);
  EXPECT_EQ(b.qualities().at("Usability").mined_hinder, (std::set<std::string>{"Recovery from attacks"}));
  EXPECT_EQ(b.qualities().at("Performance").hinder_sources, (std::vector<std::string>{"[3]"}));
}

TEST(LiteratureBaseline, RejectsContradictoryEntry) {
  EXPECT_THROW(LiteratureBaseline::parse("[qa.\"Security\"]\nbenefit = [\"Voting\"]\nhinder = [\"voting\"]\n"), Error);
  EXPECT_THROW(LiteratureBaseline::parse("[qa.\"Speed\"]\nbenefit = []\n"), Error);
  EXPECT_THROW(LiteratureBaseline::parse("[qa.\"Security\"\n"), Error);
}

TEST(DiffAgainstLiterature, BucketsKnownPairs) {
  auto all = polarized("Time stamp", "Performance", Polarity::negative, 4, 1);
  const auto hb = polarized("Heartbeat", "Performance", Polarity::negative, 47, 100);
  const auto contra = polarized("FIFO", "Performance", Polarity::negative, 2, 200);
  all.insert(all.end(), hb.begin(), hb.end());
  all.insert(all.end(), contra.begin(), contra.end());
  const auto report = diff_against_literature(tally_ledger(all), LiteratureBaseline::shipped());
  ASSERT_EQ(report.entries.size(), 3u);
  std::map<std::string, DiffBucket> bucket;
  for (const auto& e : report.entries) bucket[e.at] = e.bucket;
  EXPECT_EQ(bucket["Time stamp"], DiffBucket::little_known);
  EXPECT_EQ(bucket["Heartbeat"], DiffBucket::documented);
  EXPECT_EQ(bucket["FIFO"], DiffBucket::contradicts);
  EXPECT_NEAR(*report.little_known_fraction(), 1.0 / 3, 1e-12);
  EXPECT_NE(report.to_markdown().find("little_known"), std::string::npos);
}

TEST(DiffAgainstLiterature, EmptyLedger) {
  const auto report = diff_against_literature(PolarityLedger{}, LiteratureBaseline::shipped());
  EXPECT_TRUE(report.entries.empty());
  EXPECT_FALSE(report.little_known_fraction());
  EXPECT_EQ(report.to_json()["little_known_fraction"], "N/A");
  EXPECT_NE(report.to_markdown().find("N/A"), std::string::npos);
}

TEST(DiffAgainstLiterature, MinedColumnIsLittleKnown) {
  const auto baseline = LiteratureBaseline::shipped();
  PolarityLedger ledger;
  std::set<std::tuple<std::string, std::string, Polarity>> expected;
  for (const auto& [qa, e] : baseline.qualities()) {
    for (const auto& at : e.mined_benefit) {
      ledger.add(at, qa, Polarity::positive);
      expected.emplace(at, qa, Polarity::positive);
    }
    for (const auto& at : e.mined_hinder) {
      ledger.add(at, qa, Polarity::negative);
      expected.emplace(at, qa, Polarity::negative);
    }
  }
  const auto report = diff_against_literature(ledger, baseline);
  std::set<std::tuple<std::string, std::string, Polarity>> little;
  for (const auto& e : report.entries)
    if (e.bucket == DiffBucket::little_known) little.emplace(e.at, e.qa, e.sign);
  EXPECT_EQ(little, expected);
}

TEST(DiffAgainstLiterature, BucketsPartitionPolarizedPairs) {
  Rng rng(23);
  PolarityLedger ledger;
  for (int i = 0; i < 300; ++i)
    ledger.add(tactic_names()[rng.below(21)], quality_names()[rng.below(8)],
               rng.below(2) ? Polarity::positive : Polarity::negative);
  std::size_t polarized_pairs = 0;
  for (const auto& [key, cell] : ledger.cells()) polarized_pairs += (cell.positive > 0) + (cell.negative > 0);
  const auto report = diff_against_literature(ledger, LiteratureBaseline::shipped());
  EXPECT_EQ(report.entries.size(), polarized_pairs);
  EXPECT_EQ(report.count(DiffBucket::documented) + report.count(DiffBucket::contradicts) +
                report.count(DiffBucket::little_known),
            polarized_pairs);
}

}  // namespace
}  // namespace archminer
