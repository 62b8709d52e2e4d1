#include "archminer/relations.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>

#include <toml.hpp>

#include "archminer/embedded_data.hpp"
#include "archminer/error.hpp"
#include "archminer/preprocess.hpp"
#include "text_util.hpp"

namespace archminer {

namespace {

constexpr std::string_view kMinus = "−";

std::size_t name_index(const std::vector<std::string>& names, std::string_view name, std::string_view what) {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw Error(ErrorKind::invalid_argument, "unknown " + std::string(what) + " '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - names.begin());
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  return out + "\"";
}

}  // namespace

std::string_view to_string(Polarity p) noexcept {
  switch (p) {
    case Polarity::positive: return "positive";
    case Polarity::negative: return "negative";
    case Polarity::unspecified: return "unspecified";
  }
  return "?";
}

std::string_view to_string(PolaritySource s) noexcept { return s == PolaritySource::human ? "human" : "none"; }

std::optional<Polarity> parse_polarity(std::string_view name) noexcept {
  for (auto p : {Polarity::positive, Polarity::negative, Polarity::unspecified})
    if (to_string(p) == name) return p;
  return std::nullopt;
}

std::string InstanceKey::str() const { return std::to_string(post_id) + ":" + at + ":" + qa; }

InstanceKey InstanceKey::parse(std::string_view text) {
  const auto parts = detail::split(text, ':');
  if (parts.size() != 3 || parts[0].empty())
    throw Error(ErrorKind::invalid_argument, "instance reference must be <post_id>:<at>:<qa>");
  InstanceKey key;
  try {
    std::size_t used = 0;
    key.post_id = std::stoull(std::string(parts[0]), &used);
    if (used != parts[0].size()) throw std::invalid_argument("trailing characters");
  } catch (const std::exception&) {
    throw Error(ErrorKind::invalid_argument, "bad post id in instance reference '" + std::string(text) + "'");
  }
  key.at = parts[1];
  key.qa = parts[2];
  return key;
}

namespace {

nlohmann::ordered_json evidence_json(const Evidence& e) {
  return {{"phrase", e.phrase}, {"offset", e.offset}, {"occurrences", e.occurrences}};
}

Evidence evidence_from_json(const nlohmann::json& j) {
  return {j.at("phrase").get<std::string>(), j.at("offset").get<std::size_t>(), j.at("occurrences").get<std::size_t>()};
}

}  // namespace

nlohmann::ordered_json QaAtInstance::to_json() const {
  return {{"post_id", post_id},
          {"at", at},
          {"qa", qa},
          {"at_evidence", evidence_json(at_evidence)},
          {"qa_evidence", evidence_json(qa_evidence)},
          {"polarity", to_string(polarity)},
          {"polarity_source", to_string(polarity_source)}};
}

QaAtInstance QaAtInstance::from_json(const nlohmann::json& j) {
  QaAtInstance i;
  i.post_id = j.at("post_id").get<PostId>();
  i.at = j.at("at").get<std::string>();
  i.qa = j.at("qa").get<std::string>();
  if (canonical_tactic(i.at) != i.at || canonical_quality(i.qa) != i.qa)
    throw Error(ErrorKind::malformed_input, "instance names an unknown tactic or quality attribute");
  i.at_evidence = evidence_from_json(j.at("at_evidence"));
  i.qa_evidence = evidence_from_json(j.at("qa_evidence"));
  const auto polarity = parse_polarity(j.at("polarity").get<std::string>());
  const auto source = j.at("polarity_source").get<std::string>();
  if (!polarity || (source != "human" && source != "none"))
    throw Error(ErrorKind::malformed_input, "bad polarity fields in instance " + i.key().str());
  i.polarity = *polarity;
  i.polarity_source = source == "human" ? PolaritySource::human : PolaritySource::none;
  if (i.polarity != Polarity::unspecified && i.polarity_source != PolaritySource::human)
    throw Error(ErrorKind::malformed_input, "instance " + i.key().str() + " has a polarity not set by a human");
  return i;
}

TermMatcher::TermMatcher(const SeedLexicon& seeds, const Dictionary* dictionary) {
  for (auto [side, categories] : {std::pair{Side::tactic, &seeds.tactics()}, std::pair{Side::quality, &seeds.qualities()}})
    for (const auto& c : *categories)
      for (const auto& p : c.phrases) {
        if (!p.surface.empty()) add(p.surface, side, c.name, p.raw);
        if (p.joined && !(p.surface.size() == 1 && p.surface[0] == *p.joined)) add({*p.joined}, side, c.name, p.raw);
      }
  if (!dictionary) return;

  using Mapping = std::vector<std::pair<Side, std::string>>;
  std::map<std::string, Mapping> seed_mapping;
  for (const auto& [term, names] : seeds.tactic_terms())
    for (const auto& n : names) seed_mapping[term].emplace_back(Side::tactic, n);
  for (const auto& [term, names] : seeds.quality_terms())
    for (const auto& n : names) seed_mapping[term].emplace_back(Side::quality, n);

  std::map<std::string, std::vector<std::pair<std::string, double>>> neighbours;
  for (const auto& e : dictionary->edges()) {
    neighbours[e.a].emplace_back(e.b, e.sim);
    neighbours[e.b].emplace_back(e.a, e.sim);
  }
  const auto& entries = dictionary->entries();
  std::map<std::string, std::optional<Mapping>> memo;
  // Returns nullopt when ambiguous or unreachable.
  std::function<std::optional<Mapping>(const std::string&, std::set<std::string>&)> resolve =
      [&](const std::string& term, std::set<std::string>& on_path) -> std::optional<Mapping> {
    if (const auto it = entries.find(term); it != entries.end() && it->second.origin == Origin::seed) {
      const auto m = seed_mapping.find(term);
      if (m == seed_mapping.end()) return std::nullopt;
      return m->second;
    }
    if (const auto it = memo.find(term); it != memo.end()) return it->second;
    if (!on_path.insert(term).second) return std::nullopt;
    std::optional<Mapping> result;
    const auto n = neighbours.find(term);
    if (n != neighbours.end() && !n->second.empty()) {
      double best = -2;
      for (const auto& [other, sim] : n->second) best = std::max(best, sim);
      bool first = true;
      bool conflict = false;
      for (const auto& [other, sim] : n->second) {
        if (sim != best) continue;
        auto mapped = resolve(other, on_path);
        if (!mapped) {
          conflict = true;
          break;
        }
        std::sort(mapped->begin(), mapped->end());
        if (first) {
          result = std::move(mapped);
          first = false;
        } else if (*mapped != *result) {
          conflict = true;
          break;
        }
      }
      if (conflict) result.reset();
    }
    on_path.erase(term);
    memo[term] = result;
    return result;
  };

  for (const auto& term : dictionary->expanded_terms()) {
    std::set<std::string> on_path;
    auto mapped = resolve(term, on_path);
    if (!mapped || mapped->empty()) {
      ambiguous_.insert(term);
      continue;
    }
    for (const auto& [side, category] : *mapped) add({term}, side, category, term);
    expanded_[term] = std::move(*mapped);
  }
}

void TermMatcher::add(std::vector<std::string> tokens, Side side, const std::string& category,
                      const std::string& phrase) {
  for (const auto& p : patterns_)
    if (p.tokens == tokens && p.side == side && p.category == category) return;
  by_first_[tokens.front()].push_back(patterns_.size());
  patterns_.push_back({std::move(tokens), side, category, phrase});
}

const std::vector<std::pair<Side, std::string>>& TermMatcher::expanded_mapping(const std::string& term) const {
  static const std::vector<std::pair<Side, std::string>> none;
  const auto it = expanded_.find(term);
  return it == expanded_.end() ? none : it->second;
}

std::vector<TermMatcher::Match> TermMatcher::find_all(std::span<const std::string> stems) const {
  std::vector<Match> out;
  for (std::size_t i = 0; i < stems.size(); ++i) {
    const auto it = by_first_.find(stems[i]);
    if (it == by_first_.end()) continue;
    for (auto p : it->second) {
      const auto& tokens = patterns_[p].tokens;
      if (i + tokens.size() > stems.size()) continue;
      if (std::equal(tokens.begin(), tokens.end(), stems.begin() + static_cast<std::ptrdiff_t>(i))) out.push_back({p, i});
    }
  }
  return out;
}

std::vector<QaAtInstance> detect_instances(PostId post_id, std::span<const std::string> surface_stems,
                                           const TermMatcher& matcher) {
  struct Span {
    std::size_t begin, end;
    const std::string* phrase;
  };
  std::map<std::string, std::vector<Span>> tactics, qualities;
  for (const auto& m : matcher.find_all(surface_stems)) {
    const auto& p = matcher.patterns()[m.pattern];
    auto& into = p.side == Side::tactic ? tactics : qualities;
    into[p.category].push_back({m.offset, m.offset + p.tokens.size(), &p.phrase});
  }
  std::vector<QaAtInstance> out;
  for (const auto& [at, at_spans] : tactics)
    for (const auto& [qa, qa_spans] : qualities) {
      // Matches are in offset order, so the first disjoint pair is the earliest.
      const Span* best_at = nullptr;
      const Span* best_qa = nullptr;
      for (const auto& a : at_spans) {
        for (const auto& q : qa_spans)
          if (a.end <= q.begin || q.end <= a.begin) {
            best_at = &a;
            best_qa = &q;
            break;
          }
        if (best_at) break;
      }
      if (!best_at) continue;
      QaAtInstance inst;
      inst.post_id = post_id;
      inst.at = at;
      inst.qa = qa;
      inst.at_evidence = {*best_at->phrase, best_at->begin, at_spans.size()};
      inst.qa_evidence = {*best_qa->phrase, best_qa->begin, qa_spans.size()};
      out.push_back(std::move(inst));
    }
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.key() < y.key(); });
  return out;
}

std::vector<QaAtInstance> detect_instances(const Thread& thread, const TermMatcher& matcher) {
  const auto stems = surface_stems(thread);
  return detect_instances(thread.question.id, stems, matcher);
}

nlohmann::ordered_json PolarityEvent::to_json() const {
  return {{"instance", key.str()},
          {"polarity", to_string(polarity)},
          {"previous", to_string(previous)},
          {"annotator", annotator},
          {"timestamp", timestamp}};
}

PolarityEvent PolarityEvent::from_json(const nlohmann::json& j) {
  PolarityEvent e;
  e.key = InstanceKey::parse(j.at("instance").get<std::string>());
  const auto p = parse_polarity(j.at("polarity").get<std::string>());
  const auto prev = parse_polarity(j.at("previous").get<std::string>());
  if (!p || !prev || *p == Polarity::unspecified) throw Error(ErrorKind::malformed_input, "bad polarity in audit log");
  e.polarity = *p;
  e.previous = *prev;
  e.annotator = j.at("annotator").get<std::string>();
  e.timestamp = j.at("timestamp").get<std::string>();
  return e;
}

bool InstanceStore::add(QaAtInstance instance) {
  auto key = instance.key();
  return instances_.emplace(std::move(key), std::move(instance)).second;
}

const QaAtInstance& InstanceStore::get(const InstanceKey& key) const {
  const auto it = instances_.find(key);
  if (it == instances_.end()) throw Error(ErrorKind::unknown_instance, "no instance " + key.str());
  return it->second;
}

const QaAtInstance& InstanceStore::record_polarity(const InstanceKey& key, Polarity polarity,
                                                   const std::string& annotator, const std::string& timestamp) {
  const auto it = instances_.find(key);
  if (it == instances_.end()) throw Error(ErrorKind::unknown_instance, "no instance " + key.str());
  if (polarity == Polarity::unspecified)
    throw Error(ErrorKind::invalid_argument, "a recorded polarity must be positive or negative");
  history_.push_back({key, polarity, it->second.polarity, annotator, timestamp});
  it->second.polarity = polarity;
  it->second.polarity_source = PolaritySource::human;
  return it->second;
}

std::vector<QaAtInstance> InstanceStore::instances() const {
  std::vector<QaAtInstance> out;
  out.reserve(instances_.size());
  for (const auto& [key, inst] : instances_) out.push_back(inst);
  return out;
}

std::vector<QaAtInstance> InstanceStore::instances_for(PostId post_id) const {
  std::vector<QaAtInstance> out;
  for (auto it = instances_.lower_bound(InstanceKey{post_id, "", ""}); it != instances_.end() && it->first.post_id == post_id;
       ++it)
    out.push_back(it->second);
  return out;
}

void InstanceStore::write_instances(std::ostream& out) const {
  for (const auto& [key, inst] : instances_) out << inst.to_json().dump() << '\n';
}

namespace {

template <typename F>
void for_each_json_line(std::istream& in, F&& f) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    try {
      f(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw MalformedInput(line_no, e.what());
    }
  }
}

}  // namespace

InstanceStore InstanceStore::read_instances(std::istream& in) {
  InstanceStore store;
  for_each_json_line(in, [&](const nlohmann::json& j) {
    auto inst = QaAtInstance::from_json(j);
    const auto key = inst.key().str();
    if (!store.add(std::move(inst))) throw Error(ErrorKind::malformed_input, "duplicate instance " + key);
  });
  return store;
}

void InstanceStore::write_audit(std::ostream& out) const {
  for (const auto& e : history_) append_event(out, e);
}

void InstanceStore::replay_audit(std::istream& in) {
  for_each_json_line(in, [&](const nlohmann::json& j) {
    const auto e = PolarityEvent::from_json(j);
    record_polarity(e.key, e.polarity, e.annotator, e.timestamp);
  });
}

void InstanceStore::append_event(std::ostream& out, const PolarityEvent& event) { out << event.to_json().dump() << '\n'; }

InteractionMatrix::InteractionMatrix() : counts_(tactic_names().size() * quality_names().size(), 0) {}

std::uint64_t InteractionMatrix::at(std::string_view tactic, std::string_view quality) const {
  return counts_[name_index(tactic_names(), tactic, "tactic") * quality_names().size() +
                 name_index(quality_names(), quality, "quality attribute")];
}

void InteractionMatrix::increment(std::string_view tactic, std::string_view quality) {
  ++counts_[name_index(tactic_names(), tactic, "tactic") * quality_names().size() +
            name_index(quality_names(), quality, "quality attribute")];
}

std::uint64_t InteractionMatrix::total() const {
  std::uint64_t sum = 0;
  for (auto c : counts_) sum += c;
  return sum;
}

std::string InteractionMatrix::to_csv() const {
  std::ostringstream out;
  out << "AT";
  for (const auto& q : quality_names()) out << ',' << csv_field(q);
  out << '\n';
  const auto width = quality_names().size();
  for (std::size_t t = 0; t < tactic_names().size(); ++t) {
    out << csv_field(tactic_names()[t]);
    for (std::size_t q = 0; q < width; ++q) out << ',' << counts_[t * width + q];
    out << '\n';
  }
  return out.str();
}

InteractionMatrix build_matrix(std::span<const QaAtInstance> instances) {
  InteractionMatrix m;
  for (const auto& i : instances) m.increment(i.at, i.qa);
  return m;
}

std::string LedgerCell::render() const {
  if (empty()) return "N/A";
  const auto plus = "+ (" + std::to_string(positive) + ")";
  const auto minus = std::string(kMinus) + " (" + std::to_string(negative) + ")";
  if (positive > negative) return plus;
  if (negative > positive) return minus;
  return plus + " / " + minus;
}

LedgerCell PolarityLedger::cell(std::string_view tactic, std::string_view quality) const {
  const auto it = cells_.find({std::string(tactic), std::string(quality)});
  return it == cells_.end() ? LedgerCell{} : it->second;
}

void PolarityLedger::add(const std::string& tactic, const std::string& quality, Polarity polarity) {
  if (polarity == Polarity::unspecified) return;
  auto& c = cells_[{tactic, quality}];
  ++(polarity == Polarity::positive ? c.positive : c.negative);
}

std::vector<std::pair<std::string, std::string>> PolarityLedger::mixed_cells() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [key, c] : cells_)
    if (c.mixed()) out.push_back(key);
  return out;
}

std::uint64_t PolarityLedger::polarized_total() const {
  std::uint64_t sum = 0;
  for (const auto& [key, c] : cells_) sum += c.positive + c.negative;
  return sum;
}

std::string PolarityLedger::to_csv() const {
  std::ostringstream out;
  out << "AT";
  for (const auto& q : quality_names()) out << ',' << csv_field(q);
  out << '\n';
  for (const auto& t : tactic_names()) {
    out << csv_field(t);
    for (const auto& q : quality_names()) out << ',' << csv_field(cell(t, q).render());
    out << '\n';
  }
  return out.str();
}

std::string PolarityLedger::to_markdown() const {
  std::ostringstream out;
  out << "| AT |";
  for (const auto& q : quality_names()) out << ' ' << q << " |";
  out << "\n|---|";
  for (std::size_t i = 0; i < quality_names().size(); ++i) out << "---|";
  out << '\n';
  for (const auto& t : tactic_names()) {
    bool any = false;
    for (const auto& q : quality_names()) any = any || !cell(t, q).empty();
    if (!any) continue;
    out << "| " << t << " |";
    for (const auto& q : quality_names()) {
      const auto c = cell(t, q);
      out << ' ' << c.render() << (c.mixed() ? " (mixed)" : "") << " |";
    }
    out << '\n';
  }
  return out.str();
}

PolarityLedger tally_ledger(std::span<const QaAtInstance> instances) {
  PolarityLedger ledger;
  for (const auto& i : instances)
    if (i.polarity_source == PolaritySource::human) ledger.add(i.at, i.qa, i.polarity);
  return ledger;
}

namespace {

std::vector<std::string> string_array(const toml::table& t, std::string_view key, const std::string& where) {
  std::vector<std::string> out;
  const auto* node = t.get(key);
  if (!node) return out;
  const auto* arr = node->as_array();
  if (!arr) throw Error(ErrorKind::malformed_input, where + "." + std::string(key) + " must be an array");
  for (const auto& v : *arr) {
    const auto s = v.value<std::string>();
    if (!s) throw Error(ErrorKind::malformed_input, where + "." + std::string(key) + " holds a non-string");
    out.push_back(*s);
  }
  return out;
}

std::set<std::string> tactic_set(const std::vector<std::string>& names) {
  std::set<std::string> out;
  for (const auto& n : names) out.insert(canonical_tactic(n).value_or(n));
  return out;
}

}  // namespace

LiteratureBaseline LiteratureBaseline::parse(std::string_view toml_text) {
  toml::table root;
  try {
    root = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "literature baseline: " << e.description();
    throw MalformedInput(e.source().begin.line, msg.str());
  }
  const auto* side = root["qa"].as_table();
  if (!side) throw Error(ErrorKind::malformed_input, "literature baseline has no [qa] tables");
  LiteratureBaseline baseline;
  for (const auto& [name, node] : *side) {
    const auto quality = canonical_quality(name.str());
    if (!quality) throw Error(ErrorKind::malformed_input, "unknown quality attribute \"" + std::string(name.str()) + "\"");
    const auto* t = node.as_table();
    if (!t) throw Error(ErrorKind::malformed_input, "qa." + *quality + " must be a table");
    if (baseline.qualities_.count(*quality))
      throw Error(ErrorKind::malformed_input, "quality attribute \"" + *quality + "\" listed twice");
    BaselineEntry e;
    e.benefit = tactic_set(string_array(*t, "benefit", *quality));
    e.hinder = tactic_set(string_array(*t, "hinder", *quality));
    e.benefit_sources = string_array(*t, "benefit_sources", *quality);
    e.hinder_sources = string_array(*t, "hinder_sources", *quality);
    e.mined_benefit = tactic_set(string_array(*t, "mined_benefit", *quality));
    e.mined_hinder = tactic_set(string_array(*t, "mined_hinder", *quality));
    for (const auto& at : e.benefit)
      if (e.hinder.count(at))
        throw Error(ErrorKind::malformed_input, "\"" + at + "\" both benefits and hinders " + *quality);
    baseline.qualities_.emplace(*quality, std::move(e));
  }
  return baseline;
}

LiteratureBaseline LiteratureBaseline::shipped() { return parse(embedded_data("literature_baseline")); }

int LiteratureBaseline::sign(const std::string& tactic, const std::string& quality) const {
  const auto it = qualities_.find(quality);
  if (it == qualities_.end()) return 0;
  if (it->second.benefit.count(tactic)) return 1;
  if (it->second.hinder.count(tactic)) return -1;
  return 0;
}

std::string_view to_string(DiffBucket b) noexcept {
  switch (b) {
    case DiffBucket::documented: return "documented";
    case DiffBucket::contradicts: return "contradicts";
    case DiffBucket::little_known: return "little_known";
  }
  return "?";
}

std::size_t DiffReport::count(DiffBucket b) const {
  return static_cast<std::size_t>(std::count_if(entries.begin(), entries.end(), [b](const auto& e) { return e.bucket == b; }));
}

std::optional<double> DiffReport::little_known_fraction() const {
  if (entries.empty()) return std::nullopt;
  return static_cast<double>(count(DiffBucket::little_known)) / static_cast<double>(entries.size());
}

nlohmann::ordered_json DiffReport::to_json() const {
  nlohmann::ordered_json j;
  j["entries"] = nlohmann::ordered_json::array();
  for (const auto& e : entries)
    j["entries"].push_back({{"at", e.at},
                            {"qa", e.qa},
                            {"sign", to_string(e.sign)},
                            {"count", e.count},
                            {"bucket", to_string(e.bucket)}});
  j["counts"] = {{"documented", count(DiffBucket::documented)},
                 {"contradicts", count(DiffBucket::contradicts)},
                 {"little_known", count(DiffBucket::little_known)}};
  const auto f = little_known_fraction();
  j["little_known_fraction"] = f ? nlohmann::ordered_json(*f) : nlohmann::ordered_json("N/A");
  return j;
}

std::string DiffReport::to_markdown() const {
  std::ostringstream out;
  out << "| AT | QA | sign | count | status |\n|---|---|---|---|---|\n";
  for (const auto& e : entries)
    out << "| " << e.at << " | " << e.qa << " | " << (e.sign == Polarity::positive ? "+" : std::string(kMinus)) << " | "
        << e.count << " | " << to_string(e.bucket) << " |\n";
  const auto f = little_known_fraction();
  char buf[32] = "N/A";
  if (f) std::snprintf(buf, sizeof buf, "%.1f%%", 100 * *f);
  out << "\nLittle-known share of polarized pairs: " << buf << '\n';
  return out.str();
}

DiffReport diff_against_literature(const PolarityLedger& ledger, const LiteratureBaseline& baseline) {
  DiffReport report;
  for (const auto& [key, cell] : ledger.cells())
    for (auto [sign, count] : {std::pair{Polarity::positive, cell.positive}, std::pair{Polarity::negative, cell.negative}}) {
      if (count == 0) continue;
      const int documented = baseline.sign(key.first, key.second);
      const int own = sign == Polarity::positive ? 1 : -1;
      DiffEntry e{key.first, key.second, sign, count, DiffBucket::little_known};
      if (documented == own) e.bucket = DiffBucket::documented;
      else if (documented == -own) e.bucket = DiffBucket::contradicts;
      report.entries.push_back(std::move(e));
    }
  return report;
}

}  // namespace archminer
