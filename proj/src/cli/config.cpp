#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>

#include <toml.hpp>

#include "archminer/cli.hpp"
#include "archminer/error.hpp"
#include "archminer/fingerprint.hpp"

namespace archminer::cli {
namespace {

[[noreturn]] void bad(const std::string& message) { throw Error(ErrorKind::invalid_argument, "config: " + message); }

// Reads typed values out of one TOML table and rejects keys nobody asked for.
class Section {
 public:
  Section(const toml::table* table, std::string name) : table_(table), name_(std::move(name)) {}

  bool present() const { return table_ != nullptr; }

  Section sub(std::string_view key) {
    seen_.insert(std::string(key));
    const auto* node = table_ ? table_->get(key) : nullptr;
    if (node && !node->is_table()) bad(name_ + "." + std::string(key) + " must be a table");
    return Section(node ? node->as_table() : nullptr, name_.empty() ? std::string(key) : name_ + "." + std::string(key));
  }

  template <typename T>
  void read(std::string_view key, T& into) {
    const auto* node = find(key);
    if (!node) return;
    if constexpr (std::is_same_v<T, bool>) {
      const auto v = node->value<bool>();
      if (!v) bad(where(key) + " must be a boolean");
      into = *v;
    } else if constexpr (std::is_floating_point_v<T>) {
      const auto v = node->value<double>();
      if (!v) bad(where(key) + " must be a number");
      into = static_cast<T>(*v);
    } else if constexpr (std::is_integral_v<T>) {
      const auto v = node->value<std::int64_t>();
      if (!v || *v < 0) bad(where(key) + " must be a non-negative integer");
      into = static_cast<T>(*v);
    } else {
      const auto v = node->value<std::string>();
      if (!v) bad(where(key) + " must be a string");
      into = *v;
    }
  }

  bool has(std::string_view key) const { return table_ && table_->get(key); }

  void read_strings(std::string_view key, std::set<std::string>& into) {
    const auto* node = find(key);
    if (!node) return;
    const auto* arr = node->as_array();
    if (!arr) bad(where(key) + " must be an array of strings");
    into.clear();
    for (const auto& v : *arr) {
      const auto s = v.value<std::string>();
      if (!s) bad(where(key) + " must be an array of strings");
      into.insert(*s);
    }
  }

  void finish() const {
    if (!table_) return;
    for (const auto& [key, node] : *table_)
      if (!seen_.count(std::string(key.str()))) bad("unknown key " + where(key.str()));
  }

 private:
  const toml::node* find(std::string_view key) {
    seen_.insert(std::string(key));
    return table_ ? table_->get(key) : nullptr;
  }
  std::string where(std::string_view key) const { return name_.empty() ? std::string(key) : name_ + "." + std::string(key); }

  const toml::table* table_;
  std::string name_;
  std::set<std::string> seen_;
};

void read_filter(Section& s, CorpusFilter& f) {
  s.read("min_answers", f.min_answers);
  s.read("require_positive_score", f.require_positive_score);
  s.read_strings("tags", f.required_tags);
  s.read("exclude_code", f.exclude_code_in_question);
}

nlohmann::ordered_json filter_json(const CorpusFilter& f) {
  return {{"min_answers", f.min_answers},
          {"require_positive_score", f.require_positive_score},
          {"tags", f.required_tags},
          {"exclude_code", f.exclude_code_in_question}};
}

}  // namespace

void PipelineConfig::propagate_seed() {
  if (!explicit_seeds.count("embedding")) embedding.seed = mix_seed(seed, 1);
  if (!explicit_seeds.count("split")) split.seed = mix_seed(seed, 2);
  if (!explicit_seeds.count("classifier")) classifier_seed = mix_seed(seed, 3);
}

nlohmann::ordered_json PipelineConfig::to_json() const {
  nlohmann::ordered_json j;
  j["seed"] = seed;
  j["dump_format"] = dump_format == DumpFormat::se_xml ? "se_xml" : "jsonl";
  j["strict"] = parse_mode == ParseMode::strict;
  j["corpus_filter"] = filter_json(corpus_filter);
  j["dictionary_filter"] = filter_json(dictionary_filter);
  j["embedding"] = {{"dim", embedding.dim},
                    {"window", embedding.window},
                    {"negative_samples", embedding.negative_samples},
                    {"epochs", embedding.epochs},
                    {"min_count", embedding.min_count},
                    {"learning_rate", embedding.initial_learning_rate},
                    {"subsample", embedding.subsample},
                    {"seed", embedding.seed},
                    {"threads", embedding.threads}};
  j["expansion"] = {{"sim_threshold", expansion.sim_threshold},
                    {"gain_ratio_threshold", expansion.gain_ratio_threshold},
                    {"theta", expansion.theta},
                    {"max_iterations", expansion.max_iterations}};
  j["vectorizer"] = {{"top_k", selection.top_k ? nlohmann::ordered_json(*selection.top_k) : nullptr},
                     {"threshold", selection.threshold},
                     {"use_dictionary", use_dictionary}};
  j["classifier"] = hyperparams.to_json();
  j["classifier_seed"] = classifier_seed;
  j["split"] = {{"train_fraction", split.train_fraction}, {"seed", split.seed}};
  j["review"] = {{"annotator", annotator},
                 {"conflict_policy", conflict_policy == ConflictPolicy::conservative ? "conservative" : "majority"}};
  // Input files are covered by content fingerprints in each manifest; only
  // which inputs are configured matters here.
  j["paths"] = {{"dump", !paths.dump.empty()},
                {"dictionary_dump", !paths.dictionary_dump.empty()},
                {"labels", !paths.labels.empty()},
                {"seeds", !paths.seeds.empty()},
                {"stoplist", !paths.stoplist.empty()},
                {"nouns", !paths.nouns.empty()},
                {"baseline", !paths.baseline.empty()}};
  return j;
}

std::string PipelineConfig::hash() const { return fingerprint_of(to_json().dump()); }

PipelineConfig parse_config(std::string_view toml_text, const std::filesystem::path& base_dir) {
  toml::table root;
  try {
    root = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << e.description() << " at line " << e.source().begin.line;
    bad(msg.str());
  }
  PipelineConfig c;
  Section top(&root, "");
  top.read("seed", c.seed);

  auto paths = top.sub("paths");
  auto read_path = [&](std::string_view key, std::filesystem::path& into) {
    std::string s;
    paths.read(key, s);
    if (s.empty()) return;
    std::filesystem::path p(s);
    if (p.is_relative()) p = base_dir / p;
    into = p.lexically_normal();
  };
  read_path("dump", c.paths.dump);
  read_path("dictionary_dump", c.paths.dictionary_dump);
  read_path("labels", c.paths.labels);
  read_path("seeds", c.paths.seeds);
  read_path("stoplist", c.paths.stoplist);
  read_path("nouns", c.paths.nouns);
  read_path("baseline", c.paths.baseline);
  read_path("out", c.paths.out);
  paths.finish();

  auto ingest = top.sub("ingest");
  std::string format = "se_xml";
  ingest.read("format", format);
  const auto parsed = parse_dump_format(format);
  if (!parsed) bad("ingest.format must be se_xml or jsonl");
  c.dump_format = *parsed;
  bool strict = false;
  ingest.read("strict", strict);
  c.parse_mode = strict ? ParseMode::strict : ParseMode::lenient;
  read_filter(ingest, c.corpus_filter);
  auto dict_filter = ingest.sub("dictionary");
  read_filter(dict_filter, c.dictionary_filter);
  dict_filter.finish();
  ingest.finish();

  auto emb = top.sub("embedding");
  emb.read("dim", c.embedding.dim);
  emb.read("window", c.embedding.window);
  emb.read("negative_samples", c.embedding.negative_samples);
  emb.read("epochs", c.embedding.epochs);
  emb.read("min_count", c.embedding.min_count);
  emb.read("learning_rate", c.embedding.initial_learning_rate);
  emb.read("subsample", c.embedding.subsample);
  emb.read("threads", c.embedding.threads);
  if (emb.has("seed")) c.explicit_seeds.insert("embedding");
  emb.read("seed", c.embedding.seed);
  emb.finish();

  auto exp = top.sub("expansion");
  exp.read("sim_threshold", c.expansion.sim_threshold);
  exp.read("gain_ratio_threshold", c.expansion.gain_ratio_threshold);
  exp.read("theta", c.expansion.theta);
  exp.read("max_iterations", c.expansion.max_iterations);
  exp.finish();

  auto vec = top.sub("vectorizer");
  std::size_t top_k = *c.selection.top_k;
  vec.read("top_k", top_k);
  c.selection.top_k = top_k == 0 ? std::nullopt : std::optional<std::size_t>(top_k);
  vec.read("threshold", c.selection.threshold);
  vec.read("use_dictionary", c.use_dictionary);
  vec.finish();

  auto cls = top.sub("classifier");
  auto& h = c.hyperparams;
  cls.read("svm_lambda", h.svm_lambda);
  cls.read("svm_epochs", h.svm_epochs);
  cls.read("lr_lambda", h.lr_lambda);
  cls.read("lr_epochs", h.lr_epochs);
  cls.read("lr_step", h.lr_step);
  cls.read("dt_min_leaf", h.dt_min_leaf);
  cls.read("rf_trees", h.rf_trees);
  cls.read("bagging_trees", h.bagging_trees);
  cls.read("ensemble_min_leaf", h.ensemble_min_leaf);
  if (cls.has("seed")) c.explicit_seeds.insert("classifier");
  cls.read("seed", c.classifier_seed);
  cls.finish();

  auto split = top.sub("split");
  split.read("train_fraction", c.split.train_fraction);
  if (split.has("seed")) c.explicit_seeds.insert("split");
  split.read("seed", c.split.seed);
  split.finish();

  auto review = top.sub("review");
  review.read("annotator", c.annotator);
  std::string policy = "conservative";
  review.read("conflict_policy", policy);
  if (policy == "conservative") c.conflict_policy = ConflictPolicy::conservative;
  else if (policy == "majority") c.conflict_policy = ConflictPolicy::majority;
  else bad("review.conflict_policy must be conservative or majority");
  review.finish();
  top.finish();

  c.embedding.validate();
  c.expansion.validate();
  c.hyperparams.validate();
  if (!(c.split.train_fraction > 0 && c.split.train_fraction < 1)) bad("split.train_fraction must lie in (0, 1)");
  for (const auto* p : {&c.paths.dump, &c.paths.dictionary_dump, &c.paths.labels, &c.paths.seeds, &c.paths.stoplist,
                        &c.paths.nouns, &c.paths.baseline})
    if (!p->empty() && !std::filesystem::exists(*p)) bad("file not found: " + p->string());
  c.propagate_seed();
  return c;
}

PipelineConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorKind::invalid_argument, "config: cannot open " + file.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), file.parent_path());
}

nlohmann::ordered_json RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["format"] = "archminer-manifest/1";
  j["command"] = command;
  j["tool_version"] = tool_version;
  j["config_hash"] = config_hash;
  j["seed"] = seed;
  j["inputs"] = inputs;
  j["outputs"] = nlohmann::ordered_json::object();
  for (const auto& [name, file] : outputs)
    j["outputs"][name] = {{"file", file}, {"hash", output_hashes.count(name) ? output_hashes.at(name) : ""}};
  j["details"] = details;
  j["started_at"] = started_at;
  j["finished_at"] = finished_at;
  return j;
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
  RunManifest m;
  try {
    if (j.at("format") != "archminer-manifest/1") throw Error(ErrorKind::malformed_input, "unsupported manifest format");
    m.command = j.at("command");
    m.tool_version = j.at("tool_version");
    m.config_hash = j.at("config_hash");
    m.seed = j.at("seed");
    m.inputs = j.at("inputs").get<std::map<std::string, std::string>>();
    for (const auto& [name, o] : j.at("outputs").items()) {
      m.outputs[name] = o.at("file");
      m.output_hashes[name] = o.at("hash");
    }
    m.details = j.at("details");
    m.started_at = j.at("started_at");
    m.finished_at = j.at("finished_at");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::malformed_input, std::string("manifest: ") + e.what());
  }
  return m;
}

std::string timestamp_now() {
  std::time_t t = 0;
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch && *epoch) {
    t = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
  } else {
    t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace archminer::cli
