#include <algorithm>
#include <sstream>

#include "archminer/error.hpp"
#include "pipeline.hpp"

namespace archminer::cli {
namespace {

struct IngestResult {
  std::vector<Thread> threads;
  nlohmann::ordered_json stats;
};

IngestResult ingest_dump(const std::string& text, const PipelineConfig& c, const CorpusFilter& filter) {
  std::istringstream in(text);
  PostReader reader(in, c.dump_format, c.parse_mode);
  std::vector<Post> posts;
  while (auto p = reader.next()) posts.push_back(std::move(*p));
  const auto assembly = assemble_threads(posts);
  FilterStats stats;
  IngestResult r;
  r.threads = filter_threads(assembly.threads, filter, stats);
  r.stats = {{"posts", posts.size()},
             {"skipped_rows", reader.skipped()},
             {"issues", reader.issues().size()},
             {"orphan_answers", assembly.orphans.size()},
             {"threads", stats.input},
             {"after_answers", stats.after_answers},
             {"after_score", stats.after_score},
             {"after_tags", stats.after_tags},
             {"after_code", stats.after_code}};
  return r;
}

std::string describe_stats(const nlohmann::ordered_json& s) {
  std::ostringstream out;
  out << s["threads"].get<std::size_t>() << " threads, " << s["after_answers"].get<std::size_t>() << " answered, "
      << s["after_score"].get<std::size_t>() << " scored, " << s["after_tags"].get<std::size_t>() << " tagged, "
      << s["after_code"].get<std::size_t>() << " kept";
  return out.str();
}

std::vector<TokenizedDoc> dictionary_docs(const Context& ctx, const StopList& stoplist, const NounLexicon& nouns) {
  const auto threads = threads_from_jsonl(ctx.workspace.require_output("ingest", "dictionary_corpus"));
  PreprocessOptions options;
  options.noun_filter = &nouns;
  return preprocess_all(threads, stoplist, options);
}

std::string split_json(const LabeledSet& set) {
  nlohmann::ordered_json j;
  j["train"] = nlohmann::ordered_json::array();
  j["test"] = nlohmann::ordered_json::array();
  for (auto i : set.split.train) j["train"].push_back(set.docs[i].post_id);
  for (auto i : set.split.test) j["test"].push_back(set.docs[i].post_id);
  return j.dump() + "\n";
}

Vectorizer load_vectorizer(const Context& ctx, const std::string& output) {
  try {
    return Vectorizer::from_json(nlohmann::json::parse(ctx.workspace.require_output("vectorize", output)));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::malformed_input, std::string("vectorizer: ") + e.what());
  }
}

Dictionary load_dictionary(const Context& ctx) {
  try {
    return Dictionary::from_json(nlohmann::json::parse(ctx.workspace.require_output("dict-expand", "dictionary")));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::malformed_input, std::string("dictionary: ") + e.what());
  }
}

EvaluationEntry evaluate_model(const ClassifierModel& m, const std::vector<FeatureVector>& test) {
  std::vector<bool> predicted, truth;
  for (const auto& p : predict_batch(m, test)) predicted.push_back(p.label);
  for (const auto& fv : test) truth.push_back(*fv.label);
  EvaluationEntry e;
  e.algorithm = m.algorithm();
  e.confusion = confusion(predicted, truth);
  e.metrics = metrics(e.confusion);
  return e;
}

}  // namespace

int cmd_ingest(Context& ctx, const std::string& input, const std::string& dictionary_input) {
  auto& c = ctx.config;
  const std::filesystem::path dump = input.empty() ? c.paths.dump : std::filesystem::path(input);
  if (dump.empty()) throw Error(ErrorKind::invalid_argument, "ingest needs --input or paths.dump");
  auto m = ctx.begin("ingest");
  const auto text = read_file(dump);
  m.inputs["dump"] = content_hash(text);
  auto main = ingest_dump(text, c, c.corpus_filter);

  const std::filesystem::path dict_dump =
      dictionary_input.empty() ? c.paths.dictionary_dump : std::filesystem::path(dictionary_input);
  IngestResult dict;
  if (dict_dump.empty()) {
    dict = ingest_dump(text, c, c.dictionary_filter);
  } else {
    const auto dict_text = read_file(dict_dump);
    m.inputs["dictionary_dump"] = content_hash(dict_text);
    dict = ingest_dump(dict_text, c, c.dictionary_filter);
  }
  m.outputs["corpus"] = ctx.workspace.write_artifact("corpus", "jsonl", threads_to_jsonl(main.threads));
  m.outputs["dictionary_corpus"] = ctx.workspace.write_artifact("dict-corpus", "jsonl", threads_to_jsonl(dict.threads));
  m.details["corpus"] = main.stats;
  m.details["dictionary_corpus"] = dict.stats;
  ctx.out << "corpus: " << describe_stats(main.stats) << "\n";
  ctx.out << "dictionary corpus: " << describe_stats(dict.stats) << "\n";
  if (main.threads.empty()) ctx.err << "warning: the corpus is empty after filtering\n";
  if (dict.threads.empty()) ctx.err << "warning: the dictionary corpus is empty after filtering\n";
  ctx.finish(m);
  return ok;
}

int cmd_embed(Context& ctx) {
  auto m = ctx.begin("embed");
  const auto stoplist = ctx.stoplist();
  const auto nouns = ctx.nouns();
  const auto docs = dictionary_docs(ctx, stoplist, nouns);
  m.inputs["dictionary_corpus"] = ctx.workspace.require("ingest").output_hashes.at("dictionary_corpus");
  const auto model = train_skipgram(docs, ctx.config.embedding);
  std::ostringstream bin;
  model.write_binary(bin);
  m.outputs["embedding"] = ctx.workspace.write_artifact("embedding", "bin", bin.str());
  m.details = {{"docs", docs.size()}, {"vocabulary", model.size()}, {"dim", model.dim()}};
  ctx.out << "embedding: " << model.size() << " terms x " << model.dim() << " dims from " << docs.size() << " docs\n";
  ctx.finish(m);
  return ok;
}

int cmd_dict_expand(Context& ctx) {
  auto m = ctx.begin("dict-expand");
  const auto stoplist = ctx.stoplist();
  const auto nouns = ctx.nouns();
  const auto seeds = ctx.seeds(stoplist);
  std::istringstream bin(ctx.workspace.require_output("embed", "embedding"));
  const auto model = EmbeddingModel::read_binary(bin);
  const auto corpus_docs = dictionary_docs(ctx, stoplist, nouns);
  const auto set = labeled_set(ctx);
  const auto train_docs = set.pick_docs(set.split.train);
  const auto train_labels = set.pick_labels(set.split.train);
  const auto weighting = fit_tfidf(corpus_docs);
  const auto result =
      expand_dictionary_traced(seeds, model, corpus_docs, train_docs, train_labels, weighting, ctx.config.expansion);

  m.inputs["seeds"] = seeds.fingerprint();
  m.inputs["embedding"] = ctx.workspace.require("embed").output_hashes.at("embedding");
  m.inputs["labels"] = content_hash(read_file(ctx.config.paths.labels));
  m.outputs["dictionary"] = ctx.workspace.write_artifact("dictionary", "json", result.dictionary.to_json().dump(2) + "\n");
  auto iterations = nlohmann::ordered_json::array();
  for (const auto& it : result.iterations)
    iterations.push_back({{"iteration", it.iteration}, {"candidates", it.candidates}, {"admitted", it.admitted}});
  auto unseen = nlohmann::ordered_json::array();
  for (const auto& [term, gr] : rank_unseen_terms(result.dictionary, 20)) unseen.push_back({term, gr});
  m.details = {{"entries", result.dictionary.entries().size()},
               {"expanded", result.dictionary.expanded_terms().size()},
               {"edges", result.dictionary.edges().size()},
               {"iterations", iterations},
               {"top_unseen_terms", unseen}};
  ctx.out << "dictionary: " << result.dictionary.entries().size() << " terms ("
          << result.dictionary.expanded_terms().size() << " expanded), " << result.dictionary.edges().size()
          << " edges\n";
  ctx.finish(m);
  return ok;
}

int cmd_vectorize(Context& ctx) {
  auto m = ctx.begin("vectorize");
  const auto set = labeled_set(ctx);
  const auto train_docs = set.pick_docs(set.split.train);
  const auto train_labels = set.pick_labels(set.split.train);
  const auto base = select_features(fit_tfidf(train_docs), train_docs, train_labels, ctx.config.selection);
  m.inputs["corpus"] = ctx.workspace.require("ingest").output_hashes.at("corpus");
  m.inputs["labels"] = content_hash(read_file(ctx.config.paths.labels));
  m.outputs["vectorizer_base"] = ctx.workspace.write_artifact("vectorizer", "json", base.to_json().dump() + "\n");
  if (ctx.config.use_dictionary) {
    const auto dict = load_dictionary(ctx);
    m.inputs["dictionary"] = ctx.workspace.require("dict-expand").output_hashes.at("dictionary");
    const auto with = augment_with_dictionary(base, dict);
    m.outputs["vectorizer"] = ctx.workspace.write_artifact("vectorizer", "json", with.to_json().dump() + "\n");
    m.details["dictionary_terms"] = with.dictionary_terms().size();
  } else {
    m.outputs["vectorizer"] = m.outputs["vectorizer_base"];
  }
  m.outputs["split"] = ctx.workspace.write_artifact("split", "json", split_json(set));
  const auto positives = std::count(train_labels.begin(), train_labels.end(), true);
  m.details["labeled_docs"] = set.docs.size();
  m.details["train"] = set.split.train.size();
  m.details["test"] = set.split.test.size();
  m.details["train_positives"] = positives;
  m.details["selected_features"] = base.selected_count();
  ctx.out << "vectorizer: " << base.selected_count() << " selected of " << base.size() << " terms; split "
          << set.split.train.size() << "/" << set.split.test.size() << "\n";
  if (auto w = imbalance_warning(static_cast<std::uint64_t>(positives), train_labels.size() - positives))
    ctx.err << "warning: " << *w << "\n";
  ctx.finish(m);
  return ok;
}

int cmd_train(Context& ctx, const std::vector<Algorithm>& algorithms) {
  auto m = ctx.begin("train");
  const auto vectorizer = load_vectorizer(ctx, "vectorizer");
  const auto set = labeled_set(ctx);
  const auto train_set = featurize(vectorizer, set.pick_docs(set.split.train), set.pick_labels(set.split.train));
  const auto test = featurize(vectorizer, set.pick_docs(set.split.test), set.pick_labels(set.split.test));
  m.inputs["vectorizer"] = ctx.workspace.require("vectorize").output_hashes.at("vectorizer");

  // Models from an earlier train run over the same vectorizer are kept.
  if (const auto previous = ctx.workspace.manifest("train");
      previous && previous->inputs == m.inputs && previous->config_hash == m.config_hash) {
    for (const auto& [name, file] : previous->outputs) m.outputs[name] = file;
    if (previous->details.contains("metrics")) m.details["metrics"] = previous->details["metrics"];
  }
  for (auto a : algorithms) {
    const auto model = train(a, train_set, vectorizer.size(), ctx.config.hyperparams, ctx.config.classifier_seed);
    const auto name = "model_" + std::string(to_string(a));
    m.outputs[name] = ctx.workspace.write_artifact("model-" + std::string(to_string(a)), "json",
                                                   model_file_json(model, vectorizer));
    const auto e = evaluate_model(model, test);
    m.details["metrics"][std::string(to_string(a))] =
        nlohmann::ordered_json{{"confusion", e.confusion.to_json()}, {"metrics", e.metrics.to_json()}};
    ctx.out << to_string(a) << ": P " << format_metric(e.metrics.precision) << " R "
            << format_metric(e.metrics.recall) << " F " << format_metric(e.metrics.f_measure) << "\n";
  }
  m.outputs["metrics"] = ctx.workspace.write_artifact("train-metrics", "json", m.details["metrics"].dump(2) + "\n");
  ctx.finish(m);
  return ok;
}

int cmd_classify(Context& ctx, Algorithm algorithm, const std::string& input, std::optional<double> threshold,
                 bool include_all) {
  auto m = ctx.begin("classify");
  const auto vectorizer = load_vectorizer(ctx, "vectorizer");
  const auto model_name = "model_" + std::string(to_string(algorithm));
  const auto train_manifest = ctx.workspace.require("train");
  if (!train_manifest.outputs.count(model_name))
    throw Error(ErrorKind::missing_artifact,
                "no " + std::string(to_string(algorithm)) + " model; run `archminer train --algo " +
                    std::string(to_string(algorithm)) + "` first");
  const auto stored = parse_model_file(ctx.workspace.require_output("train", model_name));
  if (stored.vectorizer_fingerprint != vectorizer.fingerprint())
    throw Error(ErrorKind::fingerprint_mismatch,
                "the " + std::string(to_string(algorithm)) +
                    " model was trained with a different vectorizer; rerun `archminer train`");

  std::string corpus_text;
  std::string corpus_file;
  if (input.empty()) {
    corpus_text = ctx.workspace.require_output("ingest", "corpus");
    corpus_file = ctx.workspace.require("ingest").outputs.at("corpus");
  } else {
    corpus_text = read_file(input);
    corpus_file = ctx.workspace.write_artifact("classify-corpus", "jsonl", corpus_text);
  }
  const auto threads = threads_from_jsonl(corpus_text);
  std::size_t dropped = 0;
  const auto docs = preprocess_all(threads, ctx.stoplist(), {}, &dropped);
  struct Row {
    PostId id;
    Prediction p;
  };
  std::vector<Row> rows;
  const auto features = featurize(vectorizer, docs, {});
  const auto predictions = predict_batch(stored.model, features);
  for (std::size_t i = 0; i < docs.size(); ++i) rows.push_back({docs[i].post_id, predictions[i]});
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return a.p.score != b.p.score ? a.p.score > b.p.score : a.id < b.id;
  });
  std::ostringstream out;
  std::size_t kept = 0;
  for (const auto& r : rows) {
    const bool candidate = threshold ? r.p.score >= *threshold : r.p.label;
    if (!include_all && !candidate) continue;
    nlohmann::ordered_json j{{"post_id", r.id}, {"score", r.p.score}, {"label", r.p.label}, {"candidate", candidate}};
    out << j.dump() << "\n";
    kept += candidate;
  }
  m.inputs["model"] = train_manifest.output_hashes.at(model_name);
  m.inputs["corpus"] = content_hash(corpus_text);
  m.outputs["candidates"] = ctx.workspace.write_artifact("candidates", "jsonl", out.str());
  m.outputs["corpus"] = corpus_file;
  m.details = {{"algorithm", to_string(algorithm)},
               {"posts", docs.size()},
               {"empty_posts", dropped},
               {"mined", kept},
               {"threshold", threshold ? nlohmann::ordered_json(*threshold) : nullptr}};
  ctx.out << "classify: " << kept << " candidate QA-AT posts of " << docs.size() << "\n";
  ctx.finish(m);
  return ok;
}

int cmd_evaluate(Context& ctx, bool ablation, bool kappa, bool performance_only,
                 const std::vector<std::string>& annotators) {
  auto m = ctx.begin("evaluate");
  // Sections from an earlier evaluate run under the same config are kept.
  if (const auto previous = ctx.workspace.manifest("evaluate"); previous && previous->config_hash == m.config_hash) {
    m.inputs = previous->inputs;
    m.details = previous->details;
  }
  std::ostringstream text;
  const bool metrics_wanted = ablation || !(kappa || performance_only);

  if (metrics_wanted) {
    const auto train_manifest = ctx.workspace.require("train");
    const auto vectorizer = load_vectorizer(ctx, "vectorizer");
    const auto set = labeled_set(ctx);
    const auto train_labels = set.pick_labels(set.split.train);
    const auto test_docs = set.pick_docs(set.split.test);
    const auto test_labels = set.pick_labels(set.split.test);
    const auto test = featurize(vectorizer, test_docs, test_labels);
    EvaluationReport report;
    report.train_positives = static_cast<std::uint64_t>(std::count(train_labels.begin(), train_labels.end(), true));
    report.train_negatives = train_labels.size() - report.train_positives;
    report.warning = imbalance_warning(report.train_positives, report.train_negatives);
    for (auto a : all_algorithms()) {
      const auto name = "model_" + std::string(to_string(a));
      if (!train_manifest.outputs.count(name)) continue;
      const auto stored = parse_model_file(ctx.workspace.require_output("train", name));
      if (stored.vectorizer_fingerprint != vectorizer.fingerprint())
        throw Error(ErrorKind::fingerprint_mismatch,
                    "the " + std::string(to_string(a)) + " model was trained with vectorizer " +
                        stored.vectorizer_fingerprint + " but the current one is " + vectorizer.fingerprint() +
                        "; rerun `archminer train`");
      m.inputs[name] = train_manifest.output_hashes.at(name);
      report.entries.push_back(evaluate_model(stored.model, test));
    }
    m.details["evaluation"] = report.to_json();
    text << "## Classification\n\n" << report.to_table() << "\n";

    if (ablation) {
      const auto base = load_vectorizer(ctx, "vectorizer_base");
      const auto train_docs = set.pick_docs(set.split.train);
      const auto with_train = featurize(vectorizer, train_docs, train_labels);
      const auto base_train = featurize(base, train_docs, train_labels);
      const auto base_test = featurize(base, test_docs, test_labels);
      std::map<Algorithm, Metrics> with, without;
      for (auto a : all_algorithms()) {
        const auto seed = ctx.config.classifier_seed;
        with[a] = evaluate_model(train(a, with_train, vectorizer.size(), ctx.config.hyperparams, seed), test).metrics;
        without[a] =
            evaluate_model(train(a, base_train, base.size(), ctx.config.hyperparams, seed), base_test).metrics;
      }
      const auto report_ab = ablation_report(with, without);
      m.details["ablation"] = report_ab.to_json();
      text << "## Dictionary ablation\n\n" << report_ab.to_table() << "\n";
    }
  }

  if (performance_only || ctx.workspace.manifest("classify")) {
    if (const auto classify = ctx.workspace.manifest("classify")) {
      const auto verdicts = load_all_verdicts(ctx.workspace);
      const auto mined = classify->details.at("mined").get<std::uint64_t>();
      if (mined > 0 && !verdicts.records().empty()) {
        const auto confirmed = verdicts.confirmed_posts(ctx.config.conflict_policy).size();
        const double perf = performance(confirmed, mined);
        m.details["performance"] = {{"confirmed", confirmed}, {"mined", mined}, {"percent", perf}};
        text << "## Performance\n\n" << confirmed << " of " << mined << " mined posts confirmed: "
             << format_percent(perf) << "\n\n";
      } else if (performance_only) {
        throw Error(ErrorKind::missing_artifact, "no verdicts to score; run `archminer review` first");
      }
    } else {
      throw Error(ErrorKind::missing_artifact, "no classify output; run `archminer classify` first");
    }
  }

  if (kappa) {
    const auto logs = load_verdicts_by_annotator(ctx.workspace);
    std::vector<std::string> pair = annotators;
    if (pair.empty())
      for (const auto& [name, log] : logs) pair.push_back(name);
    if (pair.size() != 2)
      throw Error(ErrorKind::invalid_argument, "kappa needs exactly two annotators; pass --annotators a b");
    for (const auto& name : pair)
      if (!logs.count(name)) throw Error(ErrorKind::missing_artifact, "no verdicts from " + name + "; run review first");
    std::map<PostId, bool> a, b;
    for (const auto& r : logs.at(pair[0]).records()) a[r.post_id] = r.verdict == Verdict::confirmed_qa_at;
    for (const auto& r : logs.at(pair[1]).records()) b[r.post_id] = r.verdict == Verdict::confirmed_qa_at;
    std::vector<bool> la, lb;
    for (const auto& [id, v] : a)
      if (b.count(id)) {
        la.push_back(v);
        lb.push_back(b.at(id));
      }
    const double k = cohen_kappa(la, lb);
    m.details["kappa"] = {{"annotators", pair}, {"posts", la.size()}, {"kappa", k}};
    text << "## Agreement\n\nCohen's kappa between " << pair[0] << " and " << pair[1] << " over " << la.size()
         << " posts: " << format_metric(k) << "\n";
  }

  m.outputs["report"] = ctx.workspace.write_artifact("evaluation", "json", m.details.dump(2) + "\n");
  m.outputs["report_text"] = ctx.workspace.write_artifact("evaluation", "md", text.str());
  ctx.out << text.str();
  ctx.finish(m);
  return ok;
}

int cmd_relate(Context& ctx, const std::string& instances_file, const std::string& polarity_log) {
  auto m = ctx.begin("relate");
  InstanceStore store;
  if (!instances_file.empty()) {
    const auto text = read_file(instances_file);
    std::istringstream in(text);
    store = InstanceStore::read_instances(in);
    m.inputs["instances"] = content_hash(text);
    if (!polarity_log.empty()) {
      const auto log = read_file(polarity_log);
      std::istringstream lin(log);
      store.replay_audit(lin);
      m.inputs["polarity_log"] = content_hash(log);
    }
  } else {
    const auto review = ctx.workspace.require("review");
    store = load_instance_store(ctx.workspace);
    m.inputs = review.output_hashes;
  }
  std::vector<QaAtInstance> instances;
  if (instances_file.empty()) {
    const auto confirmed = load_all_verdicts(ctx.workspace).confirmed_posts(ctx.config.conflict_policy);
    for (const auto& i : store.instances())
      if (confirmed.count(i.post_id)) instances.push_back(i);
  } else {
    instances = store.instances();
  }
  std::ostringstream jsonl;
  for (const auto& i : instances) jsonl << i.to_json().dump() << "\n";
  const auto matrix = build_matrix(instances);
  const auto ledger = tally_ledger(instances);
  m.outputs["instances"] = ctx.workspace.write_artifact("instances", "jsonl", jsonl.str());
  m.outputs["matrix"] = ctx.workspace.write_artifact("matrix", "csv", matrix.to_csv());
  m.outputs["ledger_csv"] = ctx.workspace.write_artifact("ledger", "csv", ledger.to_csv());
  m.outputs["ledger"] = ctx.workspace.write_artifact("ledger", "json", ledger_json(ledger).dump(2) + "\n");
  m.outputs["ledger_md"] = ctx.workspace.write_artifact("ledger", "md", ledger.to_markdown());
  auto mixed = nlohmann::ordered_json::array();
  for (const auto& [at, qa] : ledger.mixed_cells()) mixed.push_back({at, qa});
  m.details = {{"instances", instances.size()}, {"polarized", ledger.polarized_total()}, {"mixed_cells", mixed}};
  ctx.out << "relate: " << instances.size() << " instances, " << ledger.polarized_total() << " polarized\n";
  if (!mixed.empty()) ctx.err << "warning: " << mixed.size() << " ledger cells carry both signs\n";
  ctx.finish(m);
  return ok;
}

int cmd_diff_lit(Context& ctx) {
  auto m = ctx.begin("diff-lit");
  PolarityLedger ledger;
  try {
    ledger = ledger_from_json(nlohmann::json::parse(ctx.workspace.require_output("relate", "ledger")));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::malformed_input, std::string("ledger: ") + e.what());
  }
  const auto baseline = ctx.baseline();
  const auto report = diff_against_literature(ledger, baseline);
  m.inputs["ledger"] = ctx.workspace.require("relate").output_hashes.at("ledger");
  m.inputs["baseline"] =
      content_hash(ctx.config.paths.baseline.empty() ? std::string("shipped") : read_file(ctx.config.paths.baseline));
  m.outputs["diff"] = ctx.workspace.write_artifact("diff", "json", report.to_json().dump(2) + "\n");
  m.outputs["diff_md"] = ctx.workspace.write_artifact("diff", "md", report.to_markdown());
  m.details = {{"documented", report.count(DiffBucket::documented)},
               {"contradicts", report.count(DiffBucket::contradicts)},
               {"little_known", report.count(DiffBucket::little_known)}};
  ctx.out << report.to_markdown();
  ctx.finish(m);
  return ok;
}

int cmd_export_graph(Context& ctx, NetworkFormat format) {
  auto m = ctx.begin("export-graph");
  const auto dict = load_dictionary(ctx);
  const char* ext = format == NetworkFormat::gexf ? "gexf" : format == NetworkFormat::dot ? "dot" : "json";
  m.inputs["dictionary"] = ctx.workspace.require("dict-expand").output_hashes.at("dictionary");
  m.outputs["network"] = ctx.workspace.write_artifact("network", ext, export_network(dict, format));
  m.details = {{"format", ext}, {"nodes", dict.entries().size()}, {"edges", dict.edges().size()}};
  ctx.out << "network: " << m.outputs["network"] << "\n";
  ctx.finish(m);
  return ok;
}

int cmd_report(Context& ctx) {
  auto m = ctx.begin("report");
  const auto& ws = ctx.workspace;
  std::ostringstream md;
  md << "# QA-AT mining report\n\n";
  bool any = false;

  if (const auto ingest = ws.manifest("ingest")) {
    any = true;
    md << "## Corpus\n\n- " << describe_stats(ingest->details["corpus"]) << "\n- dictionary corpus: "
       << describe_stats(ingest->details["dictionary_corpus"]) << "\n\n";
  }
  if (const auto dict = ws.manifest("dict-expand")) {
    any = true;
    md << "## Dictionary\n\n" << dict->details["entries"].get<std::size_t>() << " terms, "
       << dict->details["expanded"].get<std::size_t>() << " expanded, " << dict->details["edges"].get<std::size_t>()
       << " edges.\n\n| unseen term | gain ratio |\n|---|---|\n";
    for (const auto& t : dict->details["top_unseen_terms"])
      md << "| " << t[0].get<std::string>() << " | " << format_metric(t[1].get<double>()) << " |\n";
    md << "\n";
  }
  if (const auto eval = ws.manifest("evaluate")) {
    any = true;
    const auto& d = eval->details;
    if (d.contains("evaluation")) {
      md << "## Classification (held-out split)\n\n| Algorithm | TP | FP | TN | FN | Precision | Recall | F-measure |\n"
            "|---|---|---|---|---|---|---|---|\n";
      for (const auto& r : d["evaluation"]["results"]) {
        const auto& c = r["confusion"];
        const auto& mt = r["metrics"];
        md << "| " << r["algorithm"].get<std::string>() << " | " << c["tp"] << " | " << c["fp"] << " | " << c["tn"]
           << " | " << c["fn"] << " | " << format_metric(mt["precision"]) << " | " << format_metric(mt["recall"])
           << " | " << format_metric(mt["f_measure"]) << " |\n";
      }
      if (d["evaluation"].contains("warning")) md << "\n> " << d["evaluation"]["warning"].get<std::string>() << "\n";
      md << "\n";
    }
    if (d.contains("ablation")) {
      md << "## With and without the dictionary\n\n| Algorithm | F without | F with | Improvement |\n|---|---|---|---|\n";
      for (const auto& r : d["ablation"]) {
        std::string rel = "n/a";
        if (!r["relative_improvement"].is_null()) rel = format_percent(r["relative_improvement"].get<double>());
        md << "| " << r["algorithm"].get<std::string>() << " | "
           << format_metric(r["without_dictionary"]["f_measure"]) << " | "
           << format_metric(r["with_dictionary"]["f_measure"]) << " | " << rel
           << (r["regressed"].get<bool>() ? " (regressed)" : "") << " |\n";
      }
      md << "\n";
    }
    if (d.contains("performance"))
      md << "## Performance\n\n" << d["performance"]["confirmed"] << " of " << d["performance"]["mined"]
         << " mined posts confirmed: " << format_percent(d["performance"]["percent"]) << "\n\n";
    if (d.contains("kappa"))
      md << "## Agreement\n\nCohen's kappa: " << format_metric(d["kappa"]["kappa"]) << " over " << d["kappa"]["posts"]
         << " posts\n\n";
  }
  if (const auto relate = ws.manifest("relate")) {
    any = true;
    md << "## Interaction matrix\n\n```\n" << ws.require_output("relate", "matrix") << "```\n\n";
    md << "## Polarity ledger\n\n" << ws.require_output("relate", "ledger_md") << "\n";
  }
  if (ws.manifest("diff-lit")) {
    any = true;
    md << "## Against the literature\n\n" << ws.require_output("diff-lit", "diff_md") << "\n";
  }
  if (!any) throw Error(ErrorKind::missing_artifact, "nothing to report; run `archminer ingest` first");
  m.outputs["report"] = ws.write_artifact("report", "md", md.str());
  ctx.out << "report: " << m.outputs["report"] << "\n";
  ctx.finish(m);
  return ok;
}

}  // namespace archminer::cli
