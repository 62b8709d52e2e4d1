#include <cstdlib>

#include <CLI11.hpp>

#include "archminer/error.hpp"
#include "pipeline.hpp"

namespace archminer::cli {
namespace {

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument:
      return usage;
    case ErrorKind::missing_artifact:
      return missing_prerequisite;
    default:
      return data_error;
  }
}

Algorithm algorithm_arg(const std::string& name) {
  const auto a = parse_algorithm(name);
  if (!a) throw Error(ErrorKind::invalid_argument, "unknown algorithm '" + name + "'");
  return *a;
}

}  // namespace

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Mine quality attribute and architecture tactic knowledge from Q&A dumps", "archminer"};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", ARCHMINER_VERSION);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  app.add_option("--config", config_path, "pipeline TOML; falls back to $ARCHMINER_CONFIG");
  app.add_option("--seed", seed, "global seed for every stage not seeded explicitly");
  app.add_option("--out", out_dir, "artifact directory");

  auto sub = [&](const char* name, const char* help) {
    auto* s = app.add_subcommand(name, help);
    s->fallthrough();
    return s;
  };

  std::string input, dictionary_input;
  auto* ingest = sub("ingest", "parse and filter a dump into the working corpus");
  ingest->add_option("--input", input, "dump file; defaults to paths.dump");
  ingest->add_option("--dictionary-input", dictionary_input, "dump for dictionary training; defaults to paths.dictionary_dump");
  std::optional<std::string> dump_format;
  std::optional<std::size_t> min_answers;
  std::vector<std::string> tags;
  bool strict = false, exclude_code = false, allow_unscored = false;
  ingest->add_option("--format", dump_format, "se_xml or jsonl");
  ingest->add_flag("--strict", strict, "fail on the first malformed row");
  ingest->add_option("--min-answers", min_answers, "minimum answers per thread");
  ingest->add_option("--tag", tags, "required tag; repeat for alternatives");
  ingest->add_flag("--exclude-code", exclude_code, "drop threads whose question carries a code block");
  ingest->add_flag("--allow-unscored", allow_unscored, "keep questions with a score of 0 or less");

  auto* embed = sub("embed", "train word embeddings on the dictionary corpus");
  auto* dict_expand = sub("dict-expand", "grow the seed dictionary");
  auto* vectorize = sub("vectorize", "fit the TF-IDF vectorizer and the train/test split");

  std::vector<std::string> algos;
  bool all = false;
  auto* train_cmd = sub("train", "train classifiers");
  train_cmd->add_option("--algo", algos, "svm, bayes, dt, lr, rf or bagging");
  train_cmd->add_flag("--all", all, "train all six algorithms");

  std::string classify_algo = "svm";
  std::optional<double> threshold;
  bool include_all = false;
  auto* classify = sub("classify", "rank posts by QA-AT score");
  classify->add_option("--algo", classify_algo, "model to apply")->capture_default_str();
  classify->add_option("--input", input, "threads JSONL; defaults to the ingested corpus");
  classify->add_option("--threshold", threshold, "keep posts scoring at least this");
  classify->add_flag("--all", include_all, "write every post, marking candidates");

  bool ablation = false, kappa = false, performance_flag = false;
  std::vector<std::string> annotators;
  auto* evaluate = sub("evaluate", "score models, verdicts and agreement");
  evaluate->add_flag("--ablation", ablation, "compare with and without dictionary features");
  evaluate->add_flag("--kappa", kappa, "agreement between two annotators");
  evaluate->add_flag("--performance", performance_flag, "share of mined posts confirmed by review");
  evaluate->add_option("--annotators", annotators, "the two annotators to compare")->expected(2);

  std::size_t limit = 0;
  std::string annotator;
  auto* review = sub("review", "confirm candidates and their polarities interactively");
  review->add_option("--limit", limit, "stop after this many posts");
  review->add_option("--annotator", annotator, "name recorded on every verdict");

  std::string instances_file, polarity_log;
  auto* relate = sub("relate", "build the interaction matrix and polarity ledger");
  relate->add_option("--instances", instances_file, "instance JSONL instead of the review store");
  relate->add_option("--polarity-log", polarity_log, "polarity audit log to replay over --instances");

  auto* diff_lit = sub("diff-lit", "compare the ledger with the literature baseline");

  std::string format = "gexf";
  auto* export_graph = sub("export-graph", "write the dictionary network");
  export_graph->add_option("--format", format, "gexf, dot or json")->capture_default_str();

  auto* report = sub("report", "write the consolidated markdown report");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? ok : usage;
  }

  PipelineConfig config;
  try {
    if (config_path.empty())
      if (const char* env = std::getenv("ARCHMINER_CONFIG"); env && *env) config_path = env;
    if (config_path.empty()) {
      config.propagate_seed();
    } else {
      config = load_config(config_path);
    }
    if (seed) {
      config.seed = *seed;
      config.propagate_seed();
    }
    if (!out_dir.empty()) config.paths.out = out_dir;
    if (!annotator.empty()) config.annotator = annotator;
    if (dump_format) {
      const auto f = parse_dump_format(*dump_format);
      if (!f) throw Error(ErrorKind::invalid_argument, "unknown dump format '" + *dump_format + "'");
      config.dump_format = *f;
    }
    if (strict) config.parse_mode = ParseMode::strict;
    if (min_answers) config.corpus_filter.min_answers = *min_answers;
    if (!tags.empty()) config.corpus_filter.required_tags = {tags.begin(), tags.end()};
    if (exclude_code) config.corpus_filter.exclude_code_in_question = true;
    if (allow_unscored) config.corpus_filter.require_positive_score = false;
  } catch (const Error& e) {
    err << "archminer: " << e.what() << "\n";
    return usage;
  }

  Context ctx{config, Workspace(config.paths.out), in, out, err};
  try {
    if (ingest->parsed()) return cmd_ingest(ctx, input, dictionary_input);
    if (embed->parsed()) return cmd_embed(ctx);
    if (dict_expand->parsed()) return cmd_dict_expand(ctx);
    if (vectorize->parsed()) return cmd_vectorize(ctx);
    if (train_cmd->parsed()) {
      std::vector<Algorithm> chosen;
      if (all) chosen.assign(all_algorithms().begin(), all_algorithms().end());
      for (const auto& a : algos) chosen.push_back(algorithm_arg(a));
      if (chosen.empty()) throw Error(ErrorKind::invalid_argument, "train needs --algo <name> or --all");
      return cmd_train(ctx, chosen);
    }
    if (classify->parsed()) return cmd_classify(ctx, algorithm_arg(classify_algo), input, threshold, include_all);
    if (evaluate->parsed()) return cmd_evaluate(ctx, ablation, kappa, performance_flag, annotators);
    if (review->parsed()) return cmd_review(ctx, limit);
    if (relate->parsed()) return cmd_relate(ctx, instances_file, polarity_log);
    if (diff_lit->parsed()) return cmd_diff_lit(ctx);
    if (export_graph->parsed()) {
      const auto f = parse_network_format(format);
      if (!f) throw Error(ErrorKind::invalid_argument, "unknown graph format '" + format + "'");
      return cmd_export_graph(ctx, *f);
    }
    if (report->parsed()) return cmd_report(ctx);
  } catch (const Error& e) {
    err << "archminer: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const nlohmann::json::exception& e) {
    err << "archminer: malformed artifact: " << e.what() << "\n";
    return data_error;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "archminer: " << e.what() << "\n";
    return data_error;
  }
  return usage;
}

}  // namespace archminer::cli
