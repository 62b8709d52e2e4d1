#pragma once

// Seed lexicon of architecture tactics and quality attributes.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "archminer/preprocess.hpp"

namespace archminer {

// The 21 tactic names and 8 quality attribute names, in table order.
const std::vector<std::string>& tactic_names();
const std::vector<std::string>& quality_names();

// Case-insensitive lookup including the spelling variants used in the
// literature ("Sanity check", "Redundancy", "Performance (Efficiency)").
std::optional<std::string> canonical_tactic(std::string_view name);
std::optional<std::string> canonical_quality(std::string_view name);

struct SeedPhrase {
  std::string raw;
  // Stemmed tokens with stop words kept, used for contiguous matching.
  std::vector<std::string> surface;
  // Stemmed content tokens after stop word removal, used for expansion.
  std::vector<std::string> content;
  // Stem of the space/hyphen-joined form of a multi-word phrase
  // ("time out" -> "timeout"); matched as a single token as well.
  std::optional<std::string> joined;

  static SeedPhrase make(std::string raw, const StopList& stoplist);
};

struct SeedCategory {
  std::string name;
  std::vector<SeedPhrase> phrases;
};

class SeedLexicon {
 public:
  // Category names must be canonical and unique per side; phrases non-empty.
  // Subsets are allowed here; loaded files must be complete.
  SeedLexicon(std::vector<SeedCategory> tactics, std::vector<SeedCategory> qualities);

  // TOML: [at."Name"] terms = [...] and [qa."Name"] terms = [...]. All 21
  // tactics and 8 quality attributes must be present.
  static SeedLexicon parse(std::string_view toml_text, const StopList& stoplist);
  static SeedLexicon shipped(const StopList& stoplist);
  static SeedLexicon from_terms(const std::map<std::string, std::vector<std::string>>& tactics,
                                const std::map<std::string, std::vector<std::string>>& qualities,
                                const StopList& stoplist);

  const std::vector<SeedCategory>& tactics() const noexcept { return tactics_; }
  const std::vector<SeedCategory>& qualities() const noexcept { return qualities_; }
  bool complete() const noexcept;

  // Single-token stems that start dictionary expansion: content stems of
  // every phrase plus joined forms.
  std::set<std::string> expansion_terms() const;

  // Expansion term -> names of the categories whose phrases produce it.
  std::map<std::string, std::set<std::string>> tactic_terms() const;
  std::map<std::string, std::set<std::string>> quality_terms() const;

  std::string fingerprint() const;

 private:
  std::vector<SeedCategory> tactics_;
  std::vector<SeedCategory> qualities_;
};

}  // namespace archminer
