#include "archminer/lexicon.hpp"

#include <algorithm>
#include <sstream>

#include <toml.hpp>

#include "archminer/embedded_data.hpp"
#include "archminer/error.hpp"
#include "archminer/fingerprint.hpp"
#include "text_util.hpp"

namespace archminer {
namespace {

std::optional<std::string> lookup(std::string_view name, const std::vector<std::string>& names,
                                  const std::vector<std::pair<std::string_view, std::string_view>>& aliases) {
  const auto key = detail::to_lower(detail::trim(name));
  for (const auto& n : names)
    if (detail::to_lower(n) == key) return n;
  for (const auto& [alias, target] : aliases)
    if (alias == key) return std::string(target);
  return std::nullopt;
}

std::vector<SeedCategory> build_side(const std::map<std::string, std::vector<std::string>>& terms,
                                     const std::vector<std::string>& order, const StopList& stoplist) {
  std::vector<SeedCategory> side;
  for (const auto& name : order) {
    const auto it = terms.find(name);
    if (it == terms.end()) continue;
    SeedCategory category{name, {}};
    for (const auto& raw : it->second) category.phrases.push_back(SeedPhrase::make(raw, stoplist));
    side.push_back(std::move(category));
  }
  return side;
}

std::map<std::string, std::vector<std::string>> read_side(const toml::table& root, std::string_view key,
                                                          bool tactic) {
  std::map<std::string, std::vector<std::string>> out;
  const auto* side = root[key].as_table();
  if (!side) throw Error(ErrorKind::malformed_input, "seed lexicon has no [" + std::string(key) + "] tables");
  for (const auto& [name, node] : *side) {
    const auto canonical = tactic ? canonical_tactic(name.str()) : canonical_quality(name.str());
    if (!canonical) throw Error(ErrorKind::malformed_input, "unknown seed category \"" + std::string(name.str()) + "\"");
    const auto* terms = node.as_table() ? (*node.as_table())["terms"].as_array() : nullptr;
    if (!terms) throw Error(ErrorKind::malformed_input, "seed category \"" + *canonical + "\" has no terms array");
    auto& list = out[*canonical];
    for (const auto& t : *terms) {
      const auto s = t.value<std::string>();
      if (!s) throw Error(ErrorKind::malformed_input, "non-string term in \"" + *canonical + "\"");
      list.push_back(*s);
    }
  }
  return out;
}

std::map<std::string, std::set<std::string>> term_index(const std::vector<SeedCategory>& side) {
  std::map<std::string, std::set<std::string>> index;
  for (const auto& c : side)
    for (const auto& p : c.phrases) {
      for (const auto& t : p.content) index[t].insert(c.name);
      if (p.joined) index[*p.joined].insert(c.name);
    }
  return index;
}

}  // namespace

const std::vector<std::string>& tactic_names() {
  static const std::vector<std::string> names{
      "Heartbeat",        "Audit trail",     "Resource pooling",      "Authentication",
      "Checkpoint",       "Rollback",        "Spare",                 "Redundancy replication",
      "Voting",           "Shadow operation", "Secure session",       "Time out",
      "Time stamp",       "Sanity checking", "Functional redundancy", "Scheduling",
      "FIFO",             "Analytical redundancy", "Resisting attacks", "Maintain data confidentiality",
      "Recovery from attacks"};
  return names;
}

const std::vector<std::string>& quality_names() {
  static const std::vector<std::string> names{"Performance", "Maintainability",        "Compatibility", "Usability",
                                              "Reliability", "Functional Suitability", "Security",      "Portability"};
  return names;
}

std::optional<std::string> canonical_tactic(std::string_view name) {
  static const std::vector<std::pair<std::string_view, std::string_view>> aliases{
      {"sanity check", "Sanity checking"},
      {"recovery from the attacks", "Recovery from attacks"},
      {"recovering from attacks", "Recovery from attacks"},
      {"redundancy", "Redundancy replication"},
      {"replication", "Redundancy replication"},
      {"timeout", "Time out"},
      {"timestamp", "Time stamp"},
      {"first in first out", "FIFO"}};
  return lookup(name, tactic_names(), aliases);
}

std::optional<std::string> canonical_quality(std::string_view name) {
  static const std::vector<std::pair<std::string_view, std::string_view>> aliases{
      {"performance (efficiency)", "Performance"}, {"efficiency", "Performance"}};
  return lookup(name, quality_names(), aliases);
}

SeedPhrase SeedPhrase::make(std::string raw, const StopList& stoplist) {
  SeedPhrase p;
  p.surface = surface_stems(raw);
  p.content = preprocess_text(raw, stoplist);
  if (p.surface.empty()) throw Error(ErrorKind::invalid_argument, "seed phrase \"" + raw + "\" has no letters");
  const auto words = tokenize(raw);
  const bool joinable = std::all_of(raw.begin(), raw.end(), [](char c) {
    return detail::is_ascii_letter(c) || c == ' ' || c == '-';
  });
  if (words.size() > 1 && joinable) {
    std::string glued;
    for (const auto& w : words) glued += w;
    p.joined = porter_stem(glued);
  }
  p.raw = std::move(raw);
  return p;
}

SeedLexicon::SeedLexicon(std::vector<SeedCategory> tactics, std::vector<SeedCategory> qualities)
    : tactics_(std::move(tactics)), qualities_(std::move(qualities)) {
  auto check = [](const std::vector<SeedCategory>& side, bool tactic) {
    std::set<std::string> seen;
    for (const auto& c : side) {
      const auto canonical = tactic ? canonical_tactic(c.name) : canonical_quality(c.name);
      if (!canonical || *canonical != c.name)
        throw Error(ErrorKind::invalid_argument, "\"" + c.name + "\" is not a canonical category name");
      if (!seen.insert(c.name).second) throw Error(ErrorKind::invalid_argument, "duplicate category \"" + c.name + "\"");
      if (c.phrases.empty()) throw Error(ErrorKind::invalid_argument, "category \"" + c.name + "\" has no phrases");
    }
  };
  check(tactics_, true);
  check(qualities_, false);
}

SeedLexicon SeedLexicon::from_terms(const std::map<std::string, std::vector<std::string>>& tactics,
                                    const std::map<std::string, std::vector<std::string>>& qualities,
                                    const StopList& stoplist) {
  auto canonicalize = [](const std::map<std::string, std::vector<std::string>>& in, bool tactic) {
    std::map<std::string, std::vector<std::string>> out;
    for (const auto& [name, terms] : in) {
      const auto c = tactic ? canonical_tactic(name) : canonical_quality(name);
      if (!c) throw Error(ErrorKind::invalid_argument, "unknown category \"" + name + "\"");
      auto& list = out[*c];
      list.insert(list.end(), terms.begin(), terms.end());
    }
    return out;
  };
  return SeedLexicon(build_side(canonicalize(tactics, true), tactic_names(), stoplist),
                     build_side(canonicalize(qualities, false), quality_names(), stoplist));
}

SeedLexicon SeedLexicon::parse(std::string_view toml_text, const StopList& stoplist) {
  toml::table root;
  try {
    root = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "seed lexicon: " << e.description();
    throw MalformedInput(e.source().begin.line, msg.str());
  }
  SeedLexicon lexicon(build_side(read_side(root, "at", true), tactic_names(), stoplist),
                      build_side(read_side(root, "qa", false), quality_names(), stoplist));
  if (!lexicon.complete())
    throw Error(ErrorKind::malformed_input, "seed lexicon must define all 21 tactics and 8 quality attributes");
  return lexicon;
}

SeedLexicon SeedLexicon::shipped(const StopList& stoplist) { return parse(embedded_data("seeds"), stoplist); }

bool SeedLexicon::complete() const noexcept {
  return tactics_.size() == tactic_names().size() && qualities_.size() == quality_names().size();
}

std::set<std::string> SeedLexicon::expansion_terms() const {
  std::set<std::string> terms;
  for (const auto* side : {&tactics_, &qualities_})
    for (const auto& [term, categories] : term_index(*side)) terms.insert(term);
  return terms;
}

std::map<std::string, std::set<std::string>> SeedLexicon::tactic_terms() const { return term_index(tactics_); }
std::map<std::string, std::set<std::string>> SeedLexicon::quality_terms() const { return term_index(qualities_); }

std::string SeedLexicon::fingerprint() const {
  Fingerprint fp;
  for (const auto* side : {&tactics_, &qualities_}) {
    fp.update_u64(side->size());
    for (const auto& c : *side) {
      fp.update_field(c.name);
      fp.update_u64(c.phrases.size());
      for (const auto& p : c.phrases) fp.update_field(p.raw);
    }
  }
  return fp.hex();
}

}  // namespace archminer
