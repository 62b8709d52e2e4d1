#pragma once

// Command-line pipeline: configuration, run manifests and the subcommands.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "archminer/classifiers.hpp"
#include "archminer/corpus.hpp"
#include "archminer/dictionary.hpp"
#include "archminer/embedding.hpp"
#include "archminer/evaluation.hpp"
#include "archminer/features.hpp"

namespace archminer::cli {

enum ExitCode : int { ok = 0, usage = 2, missing_prerequisite = 3, data_error = 4 };

struct PipelineConfig {
  struct Paths {
    std::filesystem::path dump;             // classifier corpus dump
    std::filesystem::path dictionary_dump;  // dictionary-training dump; empty reuses `dump`
    std::filesystem::path labels;           // CSV post_id,label
    std::filesystem::path seeds;            // empty: shipped lexicon
    std::filesystem::path stoplist;         // empty: shipped list
    std::filesystem::path nouns;            // empty: shipped lexicon
    std::filesystem::path baseline;         // empty: shipped literature baseline
    std::filesystem::path out = "archminer-out";
  } paths;

  DumpFormat dump_format = DumpFormat::se_xml;
  ParseMode parse_mode = ParseMode::lenient;
  CorpusFilter corpus_filter;
  CorpusFilter dictionary_filter{1, true, {"software-architecture", "software-design"}, true};

  EmbeddingConfig embedding;
  ExpansionConfig expansion;
  Selection selection;
  bool use_dictionary = true;
  Hyperparams hyperparams;
  SplitConfig split;
  ConflictPolicy conflict_policy = ConflictPolicy::conservative;
  std::string annotator = "annotator";

  std::uint64_t classifier_seed = 0;

  std::uint64_t seed = 42;
  // Sub-seeds set explicitly in the file; the rest derive from `seed`.
  std::set<std::string> explicit_seeds;

  // Applies the global seed to every sub-seed not set explicitly.
  void propagate_seed();
  // Everything except the output directory, so relocated runs hash alike.
  nlohmann::ordered_json to_json() const;
  std::string hash() const;
};

// Relative paths resolve against the config file's directory. Every path that
// is set must exist. Throws Error(invalid_argument) on unknown keys or bad values.
PipelineConfig load_config(const std::filesystem::path& file);
PipelineConfig parse_config(std::string_view toml_text, const std::filesystem::path& base_dir);

struct RunManifest {
  std::string command;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> inputs;  // name -> fingerprint
  std::map<std::string, std::string> outputs;  // name -> artifact file name in the output dir
  std::map<std::string, std::string> output_hashes;
  nlohmann::ordered_json details = nlohmann::ordered_json::object();
  std::string started_at;
  std::string finished_at;
  std::string tool_version;

  nlohmann::ordered_json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
};

// Seconds since the epoch from SOURCE_DATE_EPOCH, else the wall clock, as
// ISO 8601 UTC.
std::string timestamp_now();

// Runs one invocation. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace archminer::cli
