#pragma once

// QA-AT instance detection and the tables built from confirmed instances.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "archminer/corpus.hpp"
#include "archminer/dictionary.hpp"
#include "archminer/lexicon.hpp"

namespace archminer {

enum class Side { tactic, quality };

struct Evidence {
  std::string phrase;           // seed phrase as written, or the expanded term
  std::size_t offset = 0;       // token offset of the first match
  std::size_t occurrences = 0;  // matches of this category in the post

  bool operator==(const Evidence&) const = default;
};

enum class Polarity { positive, negative, unspecified };
enum class PolaritySource { none, human };
std::string_view to_string(Polarity p) noexcept;
std::string_view to_string(PolaritySource s) noexcept;
std::optional<Polarity> parse_polarity(std::string_view name) noexcept;

struct InstanceKey {
  PostId post_id = 0;
  std::string at;
  std::string qa;

  // "<post_id>:<at>:<qa>"
  std::string str() const;
  static InstanceKey parse(std::string_view text);
  auto operator<=>(const InstanceKey&) const = default;
};

struct QaAtInstance {
  PostId post_id = 0;
  std::string at;
  std::string qa;
  Evidence at_evidence;
  Evidence qa_evidence;
  Polarity polarity = Polarity::unspecified;
  PolaritySource polarity_source = PolaritySource::none;

  InstanceKey key() const { return {post_id, at, qa}; }
  nlohmann::ordered_json to_json() const;
  static QaAtInstance from_json(const nlohmann::json& j);
  bool operator==(const QaAtInstance&) const = default;
};

// Phrase index over the seed lexicon plus expanded dictionary terms.
class TermMatcher {
 public:
  struct Pattern {
    std::vector<std::string> tokens;
    Side side = Side::tactic;
    std::string category;
    std::string phrase;
  };

  // Expanded terms inherit the categories of their strongest-edge neighbour,
  // followed through other expanded terms; ties that disagree leave the term
  // unmapped.
  explicit TermMatcher(const SeedLexicon& seeds, const Dictionary* dictionary = nullptr);

  const std::vector<Pattern>& patterns() const noexcept { return patterns_; }
  // Categories an expanded term maps to; empty when unmapped or ambiguous.
  const std::vector<std::pair<Side, std::string>>& expanded_mapping(const std::string& term) const;
  const std::set<std::string>& ambiguous_terms() const noexcept { return ambiguous_; }

  struct Match {
    std::size_t pattern = 0;
    std::size_t offset = 0;
  };
  std::vector<Match> find_all(std::span<const std::string> stems) const;

 private:
  void add(std::vector<std::string> tokens, Side side, const std::string& category, const std::string& phrase);

  std::vector<Pattern> patterns_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_first_;
  std::map<std::string, std::vector<std::pair<Side, std::string>>> expanded_;
  std::set<std::string> ambiguous_;
};

// One instance per distinct (AT, QA) pair whose matches occupy disjoint
// token spans in the post; polarity is left unspecified.
std::vector<QaAtInstance> detect_instances(PostId post_id, std::span<const std::string> surface_stems,
                                           const TermMatcher& matcher);
std::vector<QaAtInstance> detect_instances(const Thread& thread, const TermMatcher& matcher);

struct PolarityEvent {
  InstanceKey key;
  Polarity polarity = Polarity::unspecified;
  Polarity previous = Polarity::unspecified;
  std::string annotator;
  std::string timestamp;

  nlohmann::ordered_json to_json() const;
  static PolarityEvent from_json(const nlohmann::json& j);
  bool operator==(const PolarityEvent&) const = default;
};

class InstanceStore {
 public:
  // Returns false when the key is already stored; the stored copy is kept.
  bool add(QaAtInstance instance);
  bool contains(const InstanceKey& key) const { return instances_.count(key) != 0; }
  const QaAtInstance& get(const InstanceKey& key) const;
  // Throws Error(unknown_instance) or Error(invalid_argument) for an
  // unspecified polarity. Every call is appended to the history.
  const QaAtInstance& record_polarity(const InstanceKey& key, Polarity polarity, const std::string& annotator,
                                      const std::string& timestamp);
  std::vector<QaAtInstance> instances() const;
  std::vector<QaAtInstance> instances_for(PostId post_id) const;
  const std::vector<PolarityEvent>& history() const noexcept { return history_; }
  std::size_t size() const noexcept { return instances_.size(); }

  // Instances JSONL; polarity fields are written but the audit log is the
  // record that restores them.
  void write_instances(std::ostream& out) const;
  static InstanceStore read_instances(std::istream& in);
  void write_audit(std::ostream& out) const;
  // Replays an audit log written by write_audit or append_event.
  void replay_audit(std::istream& in);
  static void append_event(std::ostream& out, const PolarityEvent& event);

 private:
  std::map<InstanceKey, QaAtInstance> instances_;
  std::vector<PolarityEvent> history_;
};

class InteractionMatrix {
 public:
  InteractionMatrix();
  std::uint64_t at(std::string_view tactic, std::string_view quality) const;
  void increment(std::string_view tactic, std::string_view quality);
  std::uint64_t total() const;
  // Header "AT,<quality names>", one row per tactic in table order.
  std::string to_csv() const;

 private:
  std::vector<std::uint64_t> counts_;
};

InteractionMatrix build_matrix(std::span<const QaAtInstance> instances);

struct LedgerCell {
  std::uint64_t positive = 0;
  std::uint64_t negative = 0;

  bool empty() const { return positive == 0 && negative == 0; }
  bool mixed() const { return positive > 0 && negative > 0; }
  // "+ (n)", "− (n)", "N/A"; a tie renders both counts.
  std::string render() const;
};

class PolarityLedger {
 public:
  LedgerCell cell(std::string_view tactic, std::string_view quality) const;
  void add(const std::string& tactic, const std::string& quality, Polarity polarity);
  const std::map<std::pair<std::string, std::string>, LedgerCell>& cells() const noexcept { return cells_; }
  std::vector<std::pair<std::string, std::string>> mixed_cells() const;
  std::uint64_t polarized_total() const;
  std::string to_csv() const;
  std::string to_markdown() const;

 private:
  std::map<std::pair<std::string, std::string>, LedgerCell> cells_;
};

PolarityLedger tally_ledger(std::span<const QaAtInstance> instances);

struct BaselineEntry {
  std::set<std::string> benefit;
  std::set<std::string> hinder;
  std::vector<std::string> benefit_sources;
  std::vector<std::string> hinder_sources;
  std::set<std::string> mined_benefit;
  std::set<std::string> mined_hinder;
};

class LiteratureBaseline {
 public:
  // Quality names must be canonical; tactic names are canonicalised when
  // they name one of the 21 tactics and kept as printed otherwise. A tactic
  // listed as both benefit and hinder of one quality is rejected.
  static LiteratureBaseline parse(std::string_view toml_text);
  static LiteratureBaseline shipped();

  const std::map<std::string, BaselineEntry>& qualities() const noexcept { return qualities_; }
  // +1 documented benefit, -1 documented hindrance, 0 absent.
  int sign(const std::string& tactic, const std::string& quality) const;

 private:
  std::map<std::string, BaselineEntry> qualities_;
};

enum class DiffBucket { documented, contradicts, little_known };
std::string_view to_string(DiffBucket b) noexcept;

struct DiffEntry {
  std::string at;
  std::string qa;
  Polarity sign = Polarity::positive;
  std::uint64_t count = 0;
  DiffBucket bucket = DiffBucket::little_known;
};

struct DiffReport {
  std::vector<DiffEntry> entries;

  std::size_t count(DiffBucket b) const;
  // Share of polarized pairs that are little known; empty for an empty ledger.
  std::optional<double> little_known_fraction() const;
  nlohmann::ordered_json to_json() const;
  std::string to_markdown() const;
};

DiffReport diff_against_literature(const PolarityLedger& ledger, const LiteratureBaseline& baseline);

}  // namespace archminer
