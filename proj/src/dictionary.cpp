#include "archminer/dictionary.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "archminer/error.hpp"
#include "archminer/fingerprint.hpp"
#include "archminer/gain_ratio.hpp"

namespace archminer {
namespace {

std::string format_double(double x) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

double parse_double(const std::string& s) {
  double x = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), x);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) throw Error(ErrorKind::malformed_input, "bad number \"" + s + "\"");
  return x;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string dot_quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out + "\"";
}

// Unit-length copies of the model's vectors, so that cosine is a dot product.
class UnitVectors {
 public:
  explicit UnitVectors(const EmbeddingModel& model) : dim_(model.dim()), data_(model.size() * model.dim()) {
    for (std::size_t i = 0; i < model.size(); ++i) {
      const auto v = model.vector(i);
      double norm = 0;
      for (float x : v) norm += static_cast<double>(x) * x;
      norm = std::sqrt(norm);
      for (std::size_t d = 0; d < dim_; ++d) data_[i * dim_ + d] = norm > 0 ? v[d] / norm : 0.0;
    }
  }

  const double* row(std::size_t i) const { return data_.data() + i * dim_; }
  std::size_t dim() const { return dim_; }

  double dot(const double* a, const double* b) const {
    double s = 0;
    for (std::size_t d = 0; d < dim_; ++d) s += a[d] * b[d];
    return s;
  }

 private:
  std::size_t dim_;
  std::vector<double> data_;
};

std::optional<std::size_t> model_index(const EmbeddingModel& model, const std::string& term) {
  if (!model.contains(term)) return std::nullopt;
  return model.index_of(term);
}

}  // namespace

std::string_view to_string(Origin origin) noexcept { return origin == Origin::seed ? "seed" : "expanded"; }

void Dictionary::add_entry(const std::string& term, const DictionaryEntry& entry) {
  if (term.empty()) throw Error(ErrorKind::invalid_argument, "dictionary terms must be non-empty");
  if (entry.origin == Origin::seed && entry.iteration_added != 0)
    throw Error(ErrorKind::invalid_argument, "seed entry " + term + " must be added at iteration 0");
  if (!(entry.gain_ratio >= 0 && entry.gain_ratio <= 1))
    throw Error(ErrorKind::invalid_argument, "gain ratio of " + term + " outside [0, 1]");
  if (!entries_.emplace(term, entry).second) throw Error(ErrorKind::invalid_argument, "duplicate dictionary term " + term);
}

void Dictionary::add_edge(const std::string& x, const std::string& y, double sim) {
  if (!contains(x) || !contains(y)) throw Error(ErrorKind::invalid_argument, "edge endpoint is not a dictionary entry");
  if (x == y) throw Error(ErrorKind::invalid_argument, "self edge on " + x);
  Edge e{std::min(x, y), std::max(x, y), sim};
  const auto at = std::lower_bound(edges_.begin(), edges_.end(), e,
                                   [](const Edge& l, const Edge& r) { return std::tie(l.a, l.b) < std::tie(r.a, r.b); });
  if (at != edges_.end() && at->a == e.a && at->b == e.b)
    throw Error(ErrorKind::invalid_argument, "duplicate edge " + e.a + " -- " + e.b);
  edges_.insert(at, std::move(e));
}

std::set<std::string> Dictionary::terms() const {
  std::set<std::string> out;
  for (const auto& [term, entry] : entries_) out.insert(term);
  return out;
}

std::set<std::string> Dictionary::expanded_terms() const {
  std::set<std::string> out;
  for (const auto& [term, entry] : entries_)
    if (entry.origin == Origin::expanded) out.insert(term);
  return out;
}

nlohmann::ordered_json Dictionary::to_json() const {
  nlohmann::ordered_json j;
  j["entries"] = nlohmann::ordered_json::array();
  for (const auto& [term, e] : entries_)
    j["entries"].push_back({{"term", term},
                            {"gain_ratio", e.gain_ratio},
                            {"origin", to_string(e.origin)},
                            {"iteration_added", e.iteration_added}});
  j["edges"] = nlohmann::ordered_json::array();
  for (const auto& e : edges_) j["edges"].push_back(nlohmann::ordered_json::array({e.a, e.b, e.sim}));
  return j;
}

Dictionary Dictionary::from_json(const nlohmann::json& j) {
  Dictionary d;
  try {
    for (const auto& e : j.at("entries")) {
      const auto origin = e.at("origin").get<std::string>();
      if (origin != "seed" && origin != "expanded") throw Error(ErrorKind::malformed_input, "unknown origin " + origin);
      d.add_entry(e.at("term").get<std::string>(),
                  {e.at("gain_ratio").get<double>(), origin == "seed" ? Origin::seed : Origin::expanded,
                   e.at("iteration_added").get<std::uint32_t>()});
    }
    for (const auto& e : j.at("edges")) d.add_edge(e.at(0).get<std::string>(), e.at(1).get<std::string>(), e.at(2).get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::malformed_input, std::string("dictionary: ") + e.what());
  }
  return d;
}

std::string Dictionary::fingerprint() const { return fingerprint_of(to_json().dump()); }

WeightedDoc weight_doc(const TokenizedDoc& doc, const Vectorizer& vectorizer) {
  if (doc.length() == 0) throw Error(ErrorKind::empty_document, "cannot weight an empty document");
  WeightedDoc w{doc, vectorizer.tfidf(doc)};
  double total = 0;
  for (const auto& [term, weight] : w.weights) total += weight;
  if (total <= 0) {
    const auto len = static_cast<double>(doc.length());
    w.weights.clear();
    for (const auto& [term, count] : doc.token_counts) w.weights.emplace_back(term, count / len);
    return w;
  }
  for (auto& [term, weight] : w.weights) weight /= total;
  return w;
}

double post_term_similarity(const WeightedDoc& wdoc, const std::string& t, const EmbeddingModel& model) {
  const auto target = model.index_of(t);
  double sum = 0;
  for (const auto& [term, weight] : wdoc.weights) {
    if (weight == 0) continue;
    if (const auto i = model_index(model, term)) sum += weight * model.similarity(*i, target);
  }
  return sum;
}

std::size_t candidate_count(const TokenizedDoc& doc, double theta) {
  if (!(theta >= 0 && theta <= 1)) throw Error(ErrorKind::invalid_argument, "theta must lie in [0, 1]");
  // The small epsilon keeps products such as 0.1 * 200 from flooring to 19.
  return static_cast<std::size_t>(std::floor(theta * static_cast<double>(doc.length()) + 1e-9));
}

void ExpansionConfig::validate() const {
  if (!(sim_threshold > 0 && sim_threshold < 1)) throw Error(ErrorKind::invalid_argument, "sim_threshold must lie in (0, 1)");
  if (!(gain_ratio_threshold >= 0 && gain_ratio_threshold <= 1))
    throw Error(ErrorKind::invalid_argument, "gain_ratio_threshold must lie in [0, 1]");
  if (!(theta >= 0 && theta <= 1)) throw Error(ErrorKind::invalid_argument, "theta must lie in [0, 1]");
  if (max_iterations == 0) throw Error(ErrorKind::invalid_argument, "max_iterations must be positive");
}

ExpansionResult expand_dictionary_traced(const SeedLexicon& seeds, const EmbeddingModel& model,
                                         std::span<const TokenizedDoc> corpus_docs,
                                         std::span<const TokenizedDoc> labeled_docs, const std::vector<bool>& labels,
                                         const Vectorizer& vectorizer, const ExpansionConfig& config) {
  config.validate();
  const auto seed_terms = seeds.expansion_terms();
  if (seed_terms.empty()) throw Error(ErrorKind::invalid_argument, "seed lexicon yields no terms");
  const auto counts = presence_counts(labeled_docs, labels);
  const auto positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), true));
  auto ratio_of = [&](const std::string& term) {
    const auto it = counts.find(term);
    PresenceCounts c = it != counts.end() ? it->second : PresenceCounts{};
    c.positives = positives;
    c.negatives = labels.size() - positives;
    return gain_ratio(c);
  };

  ExpansionResult result;
  auto& dict = result.dictionary;
  for (const auto& term : seed_terms) dict.add_entry(term, {ratio_of(term), Origin::seed, 0});

  const UnitVectors unit(model);
  std::vector<WeightedDoc> weighted;
  weighted.reserve(corpus_docs.size());
  for (const auto& doc : corpus_docs) weighted.push_back(weight_doc(doc, vectorizer));

  for (std::uint32_t iteration = 1; iteration <= config.max_iterations; ++iteration) {
    std::vector<std::size_t> members;
    for (const auto& [term, entry] : dict.entries())
      if (const auto i = model_index(model, term)) members.push_back(*i);
    if (members.empty()) break;

    // Harvest. sum_i w_i cos(t_i, u) equals the dot product of u's unit vector
    // with the weighted sum of the doc terms' unit vectors.
    std::set<std::string> candidates;
    std::vector<double> centroid(unit.dim());
    for (const auto& wdoc : weighted) {
      const auto n = candidate_count(wdoc.doc, config.theta);
      if (n == 0) continue;
      std::fill(centroid.begin(), centroid.end(), 0.0);
      std::vector<std::pair<double, const std::string*>> unseen;
      for (const auto& [term, weight] : wdoc.weights) {
        const auto i = model_index(model, term);
        if (!i) continue;
        const double* v = unit.row(*i);
        for (std::size_t d = 0; d < unit.dim(); ++d) centroid[d] += weight * v[d];
        if (!dict.contains(term)) unseen.emplace_back(0.0, &term);
      }
      for (auto& [score, term] : unseen) score = unit.dot(centroid.data(), unit.row(model.index_of(*term)));
      std::sort(unseen.begin(), unseen.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : *a.second < *b.second;
      });
      for (std::size_t k = 0; k < std::min(n, unseen.size()); ++k) candidates.insert(*unseen[k].second);
    }

    ExpansionIteration trace{iteration, candidates.size(), {}};
    std::vector<std::pair<std::string, std::vector<std::pair<std::size_t, double>>>> admitted;
    for (const auto& term : candidates) {
      const auto ci = model.index_of(term);
      std::vector<std::pair<std::size_t, double>> links;
      double best = -1;
      for (auto m : members) {
        const double s = model.similarity(ci, m);
        best = std::max(best, s);
        if (s > config.sim_threshold) links.emplace_back(m, s);
      }
      if (best <= config.sim_threshold) continue;
      const double ratio = ratio_of(term);
      if (ratio <= config.gain_ratio_threshold) continue;
      dict.add_entry(term, {ratio, Origin::expanded, iteration});
      admitted.emplace_back(term, std::move(links));
    }
    for (const auto& [term, links] : admitted)
      for (const auto& [m, s] : links) dict.add_edge(term, model.term(m), s);
    for (std::size_t x = 0; x < admitted.size(); ++x)
      for (std::size_t y = x + 1; y < admitted.size(); ++y) {
        const double s = model.similarity(admitted[x].first, admitted[y].first);
        if (s > config.sim_threshold) dict.add_edge(admitted[x].first, admitted[y].first, s);
      }
    for (const auto& [term, links] : admitted) trace.admitted.push_back(term);
    result.iterations.push_back(std::move(trace));
    if (admitted.empty()) break;
  }
  return result;
}

Dictionary expand_dictionary(const SeedLexicon& seeds, const EmbeddingModel& model,
                             std::span<const TokenizedDoc> corpus_docs, std::span<const TokenizedDoc> labeled_docs,
                             const std::vector<bool>& labels, const Vectorizer& vectorizer,
                             const ExpansionConfig& config) {
  return expand_dictionary_traced(seeds, model, corpus_docs, labeled_docs, labels, vectorizer, config).dictionary;
}

std::vector<std::pair<std::string, double>> rank_unseen_terms(const Dictionary& dict, std::size_t k) {
  std::vector<std::pair<std::string, double>> ranked;
  for (const auto& [term, entry] : dict.entries())
    if (entry.origin == Origin::expanded) ranked.emplace_back(term, entry.gain_ratio);
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > k) ranked.resize(k);
  return ranked;
}

std::optional<NetworkFormat> parse_network_format(std::string_view name) noexcept {
  if (name == "gexf") return NetworkFormat::gexf;
  if (name == "dot") return NetworkFormat::dot;
  if (name == "json") return NetworkFormat::json;
  return std::nullopt;
}

std::string export_network(const Dictionary& dict, NetworkFormat format) {
  std::ostringstream out;
  switch (format) {
    case NetworkFormat::json:
      out << dict.to_json().dump(2) << '\n';
      break;
    case NetworkFormat::dot:
      out << "graph dictionary {\n";
      for (const auto& [term, e] : dict.entries())
        out << "  " << dot_quote(term) << " [origin=" << to_string(e.origin) << ", gain_ratio=" << format_double(e.gain_ratio)
            << ", iteration_added=" << e.iteration_added << "];\n";
      for (const auto& e : dict.edges())
        out << "  " << dot_quote(e.a) << " -- " << dot_quote(e.b) << " [weight=" << format_double(e.sim) << "];\n";
      out << "}\n";
      break;
    case NetworkFormat::gexf: {
      out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
             "<gexf xmlns=\"http://www.gexf.net/1.2draft\" version=\"1.2\">\n"
             "  <meta>\n    <creator>archminer</creator>\n    <description>term semantic network</description>\n  </meta>\n"
             "  <graph mode=\"static\" defaultedgetype=\"undirected\">\n"
             "    <attributes class=\"node\">\n"
             "      <attribute id=\"0\" title=\"gain_ratio\" type=\"double\"/>\n"
             "      <attribute id=\"1\" title=\"origin\" type=\"string\"/>\n"
             "      <attribute id=\"2\" title=\"iteration_added\" type=\"integer\"/>\n"
             "    </attributes>\n"
             "    <nodes>\n";
      for (const auto& [term, e] : dict.entries()) {
        const auto id = xml_escape(term);
        out << "      <node id=\"" << id << "\" label=\"" << id << "\">\n        <attvalues>\n"
            << "          <attvalue for=\"0\" value=\"" << format_double(e.gain_ratio) << "\"/>\n"
            << "          <attvalue for=\"1\" value=\"" << to_string(e.origin) << "\"/>\n"
            << "          <attvalue for=\"2\" value=\"" << e.iteration_added << "\"/>\n"
            << "        </attvalues>\n      </node>\n";
      }
      out << "    </nodes>\n    <edges>\n";
      for (std::size_t i = 0; i < dict.edges().size(); ++i) {
        const auto& e = dict.edges()[i];
        out << "      <edge id=\"" << i << "\" source=\"" << xml_escape(e.a) << "\" target=\"" << xml_escape(e.b)
            << "\" weight=\"" << format_double(e.sim) << "\"/>\n";
      }
      out << "    </edges>\n  </graph>\n</gexf>\n";
      break;
    }
  }
  return out.str();
}

Dictionary import_gexf(std::string_view text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream in{std::string(text)};
    pt::read_xml(in, tree);
  } catch (const pt::xml_parser_error& e) {
    throw MalformedInput(e.line(), std::string("gexf: ") + e.message());
  }
  Dictionary d;
  try {
    const auto& graph = tree.get_child("gexf.graph");
    std::map<std::string, std::string> titles;
    for (const auto& [tag, node] : graph)
      if (tag == "attributes" && node.get<std::string>("<xmlattr>.class") == "node")
        for (const auto& [atag, attr] : node)
          if (atag == "attribute") titles[attr.get<std::string>("<xmlattr>.id")] = attr.get<std::string>("<xmlattr>.title");
    if (const auto nodes = graph.get_child_optional("nodes"))
      for (const auto& [tag, node] : *nodes) {
        if (tag != "node") continue;
        std::map<std::string, std::string> values;
        if (const auto att = node.get_child_optional("attvalues"))
          for (const auto& [vtag, v] : *att)
            if (vtag == "attvalue") values[titles[v.get<std::string>("<xmlattr>.for")]] = v.get<std::string>("<xmlattr>.value");
        const auto origin = values.at("origin");
        if (origin != "seed" && origin != "expanded") throw Error(ErrorKind::malformed_input, "gexf: unknown origin " + origin);
        d.add_entry(node.get<std::string>("<xmlattr>.id"),
                    {parse_double(values.at("gain_ratio")), origin == "seed" ? Origin::seed : Origin::expanded,
                     static_cast<std::uint32_t>(std::stoul(values.at("iteration_added")))});
      }
    if (const auto edges = graph.get_child_optional("edges"))
      for (const auto& [tag, edge] : *edges) {
        if (tag != "edge") continue;
        d.add_edge(edge.get<std::string>("<xmlattr>.source"), edge.get<std::string>("<xmlattr>.target"),
                   parse_double(edge.get<std::string>("<xmlattr>.weight")));
      }
  } catch (const pt::ptree_error& e) {
    throw Error(ErrorKind::malformed_input, std::string("gexf: ") + e.what());
  } catch (const std::out_of_range&) {
    throw Error(ErrorKind::malformed_input, "gexf: node lacks a required attribute value");
  }
  return d;
}

}  // namespace archminer
