#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "archminer/error.hpp"
#include "archminer/fingerprint.hpp"
#include "pipeline.hpp"

#ifndef ARCHMINER_VERSION
#define ARCHMINER_VERSION "0.0.0"
#endif

namespace archminer::cli {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

std::string content_hash(const std::string& content) { return fingerprint_of(content); }

Workspace::Workspace(std::filesystem::path dir) : dir_(std::move(dir)) {}

void Workspace::write_atomic(const std::string& file, const std::string& content) const {
  std::filesystem::create_directories(dir_);
  const auto tmp = path(".tmp-" + file);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw Error(ErrorKind::io, "cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path(file));
}

std::string Workspace::write_artifact(const std::string& kind, const std::string& ext, const std::string& content) const {
  const auto file = kind + "-" + content_hash(content) + "." + ext;
  if (!exists(file)) write_atomic(file, content);
  return file;
}

std::string Workspace::read(const std::string& file) const { return read_file(path(file)); }

std::optional<RunManifest> Workspace::manifest(const std::string& step) const {
  const auto file = "manifest-" + step + ".json";
  if (!exists(file)) return std::nullopt;
  try {
    return RunManifest::from_json(nlohmann::json::parse(read(file)));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::malformed_input, file + ": " + e.what());
  }
}

RunManifest Workspace::require(const std::string& step) const {
  auto m = manifest(step);
  if (!m)
    throw Error(ErrorKind::missing_artifact,
                "no " + step + " output in " + dir_.string() + "; run `archminer " + step + "` first");
  return *m;
}

std::string Workspace::require_output(const std::string& step, const std::string& output) const {
  const auto m = require(step);
  const auto it = m.outputs.find(output);
  if (it == m.outputs.end() || !exists(it->second))
    throw Error(ErrorKind::missing_artifact,
                "the " + step + " step did not leave a " + output + " artifact; rerun `archminer " + step + "`");
  auto content = read(it->second);
  if (content_hash(content) != m.output_hashes.at(output))
    throw Error(ErrorKind::fingerprint_mismatch, it->second + " does not match the hash in manifest-" + step + ".json");
  return content;
}

void Workspace::write_manifest(const RunManifest& manifest) const {
  write_atomic("manifest-" + manifest.command + ".json", manifest.to_json().dump(2) + "\n");
}

RunManifest Context::begin(const std::string& command) const {
  RunManifest m;
  m.command = command;
  m.config_hash = config.hash();
  m.seed = config.seed;
  m.tool_version = ARCHMINER_VERSION;
  m.started_at = timestamp_now();
  return m;
}

void Context::finish(RunManifest& manifest) const {
  for (const auto& [name, file] : manifest.outputs) manifest.output_hashes[name] = content_hash(workspace.read(file));
  manifest.finished_at = timestamp_now();
  workspace.write_manifest(manifest);
}

StopList Context::stoplist() const {
  if (config.paths.stoplist.empty()) return StopList::shipped();
  std::istringstream in(read_file(config.paths.stoplist));
  return StopList::load(in);
}

NounLexicon Context::nouns() const {
  if (config.paths.nouns.empty()) return NounLexicon::shipped();
  std::istringstream in(read_file(config.paths.nouns));
  return NounLexicon::load(in);
}

SeedLexicon Context::seeds(const StopList& stoplist) const {
  if (config.paths.seeds.empty()) return SeedLexicon::shipped(stoplist);
  return SeedLexicon::parse(read_file(config.paths.seeds), stoplist);
}

LiteratureBaseline Context::baseline() const {
  if (config.paths.baseline.empty()) return LiteratureBaseline::shipped();
  return LiteratureBaseline::parse(read_file(config.paths.baseline));
}

std::map<PostId, bool> Context::labels() const {
  if (config.paths.labels.empty())
    throw Error(ErrorKind::invalid_argument, "config: paths.labels is required for this step");
  std::istringstream in(read_file(config.paths.labels));
  std::map<PostId, bool> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto comma = line.find(',');
    const auto id = line.substr(0, comma);
    const auto value = comma == std::string::npos ? std::string() : line.substr(comma + 1);
    if (line_no == 1 && id == "post_id") continue;
    bool label = false;
    if (value == "1" || value == "true" || value == "yes") label = true;
    else if (value == "0" || value == "false" || value == "no") label = false;
    else throw MalformedInput(line_no, "label must be 1/0, true/false or yes/no");
    try {
      std::size_t used = 0;
      const auto post = std::stoull(id, &used);
      if (used != id.size()) throw std::invalid_argument(id);
      if (!out.emplace(post, label).second) throw MalformedInput(line_no, "post " + id + " labelled twice");
    } catch (const std::logic_error&) {
      throw MalformedInput(line_no, "bad post id '" + id + "'");
    }
  }
  return out;
}

std::vector<Thread> threads_from_jsonl(const std::string& text) {
  std::istringstream in(text);
  const auto posts = read_posts(in, DumpFormat::jsonl, ParseMode::strict);
  return assemble_threads(posts).threads;
}

std::string threads_to_jsonl(const std::vector<Thread>& threads) {
  std::ostringstream out;
  write_jsonl(out, std::span<const Thread>(threads));
  return out.str();
}

std::vector<TokenizedDoc> preprocess_all(const std::vector<Thread>& threads, const StopList& stoplist,
                                         const PreprocessOptions& options, std::size_t* dropped) {
  std::vector<TokenizedDoc> docs;
  std::size_t skipped = 0;
  for (const auto& t : threads) {
    try {
      docs.push_back(preprocess_thread(t, stoplist, options));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::empty_document) throw;
      ++skipped;
    }
  }
  if (dropped) *dropped = skipped;
  return docs;
}

std::vector<TokenizedDoc> LabeledSet::pick_docs(const std::vector<std::size_t>& idx) const {
  std::vector<TokenizedDoc> out;
  for (auto i : idx) out.push_back(docs[i]);
  return out;
}

std::vector<bool> LabeledSet::pick_labels(const std::vector<std::size_t>& idx) const {
  std::vector<bool> out;
  for (auto i : idx) out.push_back(labels[i]);
  return out;
}

LabeledSet labeled_set(const Context& ctx) {
  const auto threads = threads_from_jsonl(ctx.workspace.require_output("ingest", "corpus"));
  const auto labels = ctx.labels();
  std::vector<Thread> labeled;
  for (const auto& t : threads)
    if (labels.count(t.question.id)) labeled.push_back(t);
  LabeledSet set;
  set.docs = preprocess_all(labeled, ctx.stoplist(), {});
  for (const auto& d : set.docs) set.labels.push_back(labels.at(d.post_id));
  set.split = split_train_test(set.labels, ctx.config.split);
  return set;
}

std::vector<FeatureVector> featurize(const Vectorizer& v, const std::vector<TokenizedDoc>& docs,
                                     const std::vector<bool>& labels) {
  std::vector<FeatureVector> out;
  out.reserve(docs.size());
  for (std::size_t i = 0; i < docs.size(); ++i) {
    auto fv = v.transform(docs[i]);
    if (i < labels.size()) fv.label = labels[i];
    out.push_back(std::move(fv));
  }
  return out;
}

std::string model_file_json(const ClassifierModel& model, const Vectorizer& vectorizer) {
  nlohmann::ordered_json j;
  j["vectorizer_fingerprint"] = vectorizer.fingerprint();
  j["model"] = model.to_json();
  return j.dump() + "\n";
}

StoredModel parse_model_file(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    return {j.at("vectorizer_fingerprint").get<std::string>(), ClassifierModel::from_json(j.at("model"))};
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::malformed_input, std::string("model file: ") + e.what());
  }
}

std::string verdict_file(const std::string& annotator) {
  for (char c : annotator)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.'))
      throw Error(ErrorKind::invalid_argument, "annotator names may only use letters, digits, '-', '_' and '.'");
  if (annotator.empty()) throw Error(ErrorKind::invalid_argument, "annotator name is empty");
  return "verdicts-" + annotator + ".jsonl";
}

std::map<std::string, VerdictLog> load_verdicts_by_annotator(const Workspace& ws) {
  std::map<std::string, VerdictLog> out;
  if (!std::filesystem::exists(ws.dir())) return out;
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(ws.dir())) {
    const auto name = entry.path().filename().string();
    if (name.rfind("verdicts-", 0) == 0 && entry.path().extension() == ".jsonl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    std::istringstream in(read_file(f));
    auto log = VerdictLog::load(in);
    const auto stem = f.stem().string().substr(std::string("verdicts-").size());
    for (const auto& r : log.records())
      if (r.annotator != stem)
        throw Error(ErrorKind::malformed_input, f.filename().string() + " holds a verdict by " + r.annotator);
    out.emplace(stem, std::move(log));
  }
  return out;
}

VerdictLog load_all_verdicts(const Workspace& ws) {
  VerdictLog all;
  for (const auto& [annotator, log] : load_verdicts_by_annotator(ws))
    for (const auto& r : log.records()) all.add(r);
  return all;
}

InstanceStore load_instance_store(const Workspace& ws) {
  InstanceStore store;
  if (ws.exists(kInstancesFile)) {
    std::istringstream in(ws.read(kInstancesFile));
    store = InstanceStore::read_instances(in);
  }
  if (ws.exists(kPolarityLogFile)) {
    std::istringstream in(ws.read(kPolarityLogFile));
    store.replay_audit(in);
  }
  return store;
}

nlohmann::ordered_json ledger_json(const PolarityLedger& ledger) {
  auto cells = nlohmann::ordered_json::array();
  for (const auto& [key, c] : ledger.cells()) cells.push_back({key.first, key.second, c.positive, c.negative});
  return {{"format", "archminer-ledger/1"}, {"cells", cells}};
}

PolarityLedger ledger_from_json(const nlohmann::json& j) {
  PolarityLedger ledger;
  try {
    for (const auto& c : j.at("cells")) {
      const auto at = c.at(0).get<std::string>();
      const auto qa = c.at(1).get<std::string>();
      for (auto n = c.at(2).get<std::uint64_t>(); n > 0; --n) ledger.add(at, qa, Polarity::positive);
      for (auto n = c.at(3).get<std::uint64_t>(); n > 0; --n) ledger.add(at, qa, Polarity::negative);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::malformed_input, std::string("ledger: ") + e.what());
  }
  return ledger;
}

}  // namespace archminer::cli
