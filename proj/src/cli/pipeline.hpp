#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "archminer/cli.hpp"
#include "archminer/lexicon.hpp"
#include "archminer/preprocess.hpp"
#include "archminer/relations.hpp"

namespace archminer::cli {

// Output directory holding hash-named artifacts and one manifest per step.
class Workspace {
 public:
  explicit Workspace(std::filesystem::path dir);

  const std::filesystem::path& dir() const noexcept { return dir_; }
  std::filesystem::path path(const std::string& file) const { return dir_ / file; }

  // Writes `content` to <kind>-<hash>.<ext> unless it already exists and
  // returns the file name.
  std::string write_artifact(const std::string& kind, const std::string& ext, const std::string& content) const;
  std::string read(const std::string& file) const;
  bool exists(const std::string& file) const { return std::filesystem::exists(path(file)); }
  void write_atomic(const std::string& file, const std::string& content) const;

  std::optional<RunManifest> manifest(const std::string& step) const;
  // Throws Error(missing_artifact) naming the subcommand to run first.
  RunManifest require(const std::string& step) const;
  // Reads the named output of a step's manifest, checking its hash.
  std::string require_output(const std::string& step, const std::string& output) const;
  void write_manifest(const RunManifest& manifest) const;

 private:
  std::filesystem::path dir_;
};

struct Context {
  PipelineConfig config;
  Workspace workspace;
  std::istream& in;
  std::ostream& out;
  std::ostream& err;

  RunManifest begin(const std::string& command) const;
  void finish(RunManifest& manifest) const;

  StopList stoplist() const;
  NounLexicon nouns() const;
  SeedLexicon seeds(const StopList& stoplist) const;
  LiteratureBaseline baseline() const;
  std::map<PostId, bool> labels() const;
};

std::string read_file(const std::filesystem::path& path);
std::string content_hash(const std::string& content);

std::vector<Thread> threads_from_jsonl(const std::string& text);
std::string threads_to_jsonl(const std::vector<Thread>& threads);

// Preprocesses threads, dropping those left without tokens.
std::vector<TokenizedDoc> preprocess_all(const std::vector<Thread>& threads, const StopList& stoplist,
                                         const PreprocessOptions& options, std::size_t* dropped = nullptr);

struct LabeledSet {
  std::vector<TokenizedDoc> docs;
  std::vector<bool> labels;
  Split split;

  std::vector<TokenizedDoc> pick_docs(const std::vector<std::size_t>& idx) const;
  std::vector<bool> pick_labels(const std::vector<std::size_t>& idx) const;
};

// Labelled docs from the ingested corpus in corpus order, with the seeded split.
LabeledSet labeled_set(const Context& ctx);

std::vector<FeatureVector> featurize(const Vectorizer& v, const std::vector<TokenizedDoc>& docs,
                                     const std::vector<bool>& labels);

struct StoredModel {
  std::string vectorizer_fingerprint;
  ClassifierModel model;
};
std::string model_file_json(const ClassifierModel& model, const Vectorizer& vectorizer);
StoredModel parse_model_file(const std::string& text);

// Verdict logs are kept per annotator as verdicts-<annotator>.jsonl.
std::string verdict_file(const std::string& annotator);
VerdictLog load_all_verdicts(const Workspace& ws);
std::map<std::string, VerdictLog> load_verdicts_by_annotator(const Workspace& ws);

inline const char* kInstancesFile = "instances.jsonl";
inline const char* kPolarityLogFile = "polarity-log.jsonl";
InstanceStore load_instance_store(const Workspace& ws);

nlohmann::ordered_json ledger_json(const PolarityLedger& ledger);
PolarityLedger ledger_from_json(const nlohmann::json& j);

int cmd_ingest(Context& ctx, const std::string& input, const std::string& dictionary_input);
int cmd_embed(Context& ctx);
int cmd_dict_expand(Context& ctx);
int cmd_vectorize(Context& ctx);
int cmd_train(Context& ctx, const std::vector<Algorithm>& algorithms);
int cmd_classify(Context& ctx, Algorithm algorithm, const std::string& input, std::optional<double> threshold,
                 bool include_all);
int cmd_evaluate(Context& ctx, bool ablation, bool kappa, bool performance, const std::vector<std::string>& annotators);
int cmd_review(Context& ctx, std::size_t limit);
int cmd_relate(Context& ctx, const std::string& instances_file, const std::string& polarity_log);
int cmd_diff_lit(Context& ctx);
int cmd_export_graph(Context& ctx, NetworkFormat format);
int cmd_report(Context& ctx);

}  // namespace archminer::cli
