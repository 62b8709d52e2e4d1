#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "archminer/cli.hpp"
#include "archminer/error.hpp"
#include "archminer/relations.hpp"
#include "synthetic.hpp"

using namespace archminer;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() /
           ("archminer-cli-" + std::to_string(::getpid()) + "-" + info->test_suite_name() + "-" + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    ::setenv("SOURCE_DATE_EPOCH", "1700000000", 1);
    ::unsetenv("ARCHMINER_CONFIG");
    corpus_ = archminer::testing::qa_at_corpus(60, 60, 17);
    write(dir_ / "posts.xml", archminer::testing::posts_xml(corpus_.threads));
    write(dir_ / "labels.csv", archminer::testing::labels_csv(corpus_));
    config("");
  }
  void TearDown() override { fs::remove_all(dir_); }

  void config(const std::string& extra) {
    write(dir_ / "pipeline.toml", "[paths]\ndump = \"posts.xml\"\nlabels = \"labels.csv\"\nout = \"out\"\n\n"
                                  "[embedding]\ndim = 24\nepochs = 3\n\n[classifier]\nrf_trees = 15\n"
                                  "bagging_trees = 10\n" +
                                      extra);
  }

  Result run(std::vector<std::string> args, const std::string& input = "") {
    args.insert(args.end(), {"--config", (dir_ / "pipeline.toml").string()});
    std::istringstream in(input);
    std::ostringstream out, err;
    Result r;
    r.code = cli::run(args, in, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
  }

  void run_ok(const std::vector<std::string>& args, const std::string& input = "") {
    const auto r = run(args, input);
    ASSERT_EQ(r.code, 0) << args.front() << ": " << r.err;
  }

  void through_train() {
    for (const auto& step : {"ingest", "embed", "dict-expand", "vectorize"}) run_ok({step});
    run_ok({"train", "--all"});
  }

  // Writes threads JSONL for classify --input and returns its path.
  fs::path threads_file(const std::vector<Thread>& threads, const std::string& name) {
    std::ostringstream s;
    write_jsonl(s, std::span<const Thread>(threads));
    write(dir_ / name, s.str());
    return dir_ / name;
  }

  cli::RunManifest manifest(const std::string& step) const {
    return cli::RunManifest::from_json(nlohmann::json::parse(slurp(dir_ / "out" / ("manifest-" + step + ".json"))));
  }

  std::vector<nlohmann::json> candidates() const {
    std::vector<nlohmann::json> rows;
    std::istringstream in(slurp(dir_ / "out" / manifest("classify").outputs.at("candidates")));
    for (std::string line; std::getline(in, line);)
      if (!line.empty()) rows.push_back(nlohmann::json::parse(line));
    return rows;
  }

  fs::path dir_;
  archminer::testing::QaAtCorpus corpus_;
};

Post post(PostId id, PostKind kind, std::int64_t score, std::optional<PostId> parent = std::nullopt) {
  Post p;
  p.id = id;
  p.kind = kind;
  p.score = score;
  p.parent_id = parent;
  p.body_html = "<p>How does a heartbeat affect performance?</p>";
  if (kind == PostKind::question) {
    p.title = "Question " + std::to_string(id);
    p.tags = {"software-architecture"};
  }
  return p;
}

TEST_F(Cli, IngestDropsUnansweredThread) {
  std::vector<Post> posts{post(1, PostKind::question, 3), post(2, PostKind::answer, 1, 1),
                          post(3, PostKind::question, 2), post(4, PostKind::question, 5),
                          post(5, PostKind::answer, 2, 4)};
  std::ostringstream s;
  write_jsonl(s, std::span<const Post>(posts));
  write(dir_ / "three.jsonl", s.str());
  config("[ingest]\nformat = \"jsonl\"\n");
  run_ok({"ingest", "--input", (dir_ / "three.jsonl").string()});
  const auto m = manifest("ingest");
  EXPECT_EQ(m.details["corpus"]["threads"], 3);
  EXPECT_EQ(m.details["corpus"]["after_answers"], 2);
  std::istringstream corpus(slurp(dir_ / "out" / m.outputs.at("corpus")));
  const auto threads = assemble_threads(read_posts(corpus, DumpFormat::jsonl)).threads;
  ASSERT_EQ(threads.size(), 2u);
  EXPECT_EQ(threads[0].question.id, 1u);
  EXPECT_EQ(threads[1].question.id, 4u);
}

TEST_F(Cli, IngestFilterFlags) {
  std::vector<Post> posts{post(1, PostKind::question, 3), post(2, PostKind::answer, 1, 1),
                          post(3, PostKind::question, 0), post(4, PostKind::answer, 1, 3)};
  posts[2].tags = {"java"};
  std::ostringstream s;
  write_jsonl(s, std::span<const Post>(posts));
  write(dir_ / "two.jsonl", s.str());
  run_ok({"ingest", "--format", "jsonl", "--input", (dir_ / "two.jsonl").string()});
  EXPECT_EQ(manifest("ingest").details["corpus"]["after_code"], 1);
  run_ok({"ingest", "--format", "jsonl", "--allow-unscored", "--input", (dir_ / "two.jsonl").string()});
  EXPECT_EQ(manifest("ingest").details["corpus"]["after_code"], 2);
  run_ok({"ingest", "--format", "jsonl", "--allow-unscored", "--tag", "java", "--input", (dir_ / "two.jsonl").string()});
  EXPECT_EQ(manifest("ingest").details["corpus"]["after_code"], 1);
  run_ok({"ingest", "--format", "jsonl", "--min-answers", "2", "--input", (dir_ / "two.jsonl").string()});
  EXPECT_EQ(manifest("ingest").details["corpus"]["after_code"], 0);
  EXPECT_EQ(run({"ingest", "--format", "csv"}).code, cli::usage);
}

TEST_F(Cli, IngestEmptyDumpWarns) {
  write(dir_ / "empty.xml", "<?xml version=\"1.0\"?>\n<posts>\n</posts>\n");
  const auto r = run({"ingest", "--input", (dir_ / "empty.xml").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("empty"), std::string::npos);
  EXPECT_EQ(slurp(dir_ / "out" / manifest("ingest").outputs.at("corpus")), "");
}

TEST_F(Cli, IngestRerunIsByteIdentical) {
  run_ok({"ingest"});
  const auto first = slurp(dir_ / "out" / "manifest-ingest.json");
  run_ok({"ingest"});
  EXPECT_EQ(slurp(dir_ / "out" / "manifest-ingest.json"), first);
  EXPECT_EQ(manifest("ingest").details["corpus"]["after_code"], 120);
}

TEST_F(Cli, MissingPrerequisiteNamesTheStep) {
  const auto r = run({"embed"});
  EXPECT_EQ(r.code, cli::missing_prerequisite);
  EXPECT_NE(r.err.find("archminer ingest"), std::string::npos) << r.err;
  run_ok({"ingest"});
  const auto v = run({"train", "--algo", "svm"});
  EXPECT_EQ(v.code, cli::missing_prerequisite);
  EXPECT_NE(v.err.find("archminer vectorize"), std::string::npos) << v.err;
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, cli::usage);
  EXPECT_EQ(run({"frobnicate"}).code, cli::usage);
  EXPECT_EQ(run({"train", "--algo", "knn"}).code, cli::usage);
  EXPECT_EQ(run({"train"}).code, cli::usage);
  config("[embedding]\nbogus = 1\n");
  EXPECT_EQ(run({"ingest"}).code, cli::usage);
  write(dir_ / "pipeline.toml", "[paths]\ndump = \"missing.xml\"\n");
  const auto r = run({"ingest"});
  EXPECT_EQ(r.code, cli::usage);
  EXPECT_NE(r.err.find("missing.xml"), std::string::npos);
}

TEST_F(Cli, ExampleConfigLoads) {
  fs::copy_file(fs::path(ARCHMINER_SOURCE_DIR) / "pipeline.example.toml", dir_ / "pipeline.toml",
                fs::copy_options::overwrite_existing);
  const auto parsed = cli::load_config(dir_ / "pipeline.toml");
  cli::PipelineConfig defaults;
  defaults.paths.dump = dir_ / "posts.xml";
  defaults.paths.labels = dir_ / "labels.csv";
  defaults.propagate_seed();
  EXPECT_EQ(parsed.hash(), defaults.hash());
  run_ok({"ingest", "--out", (dir_ / "out").string()});
}

TEST_F(Cli, ConfigFromEnvironment) {
  ::setenv("ARCHMINER_CONFIG", (dir_ / "pipeline.toml").string().c_str(), 1);
  std::istringstream in;
  std::ostringstream out, err;
  EXPECT_EQ(cli::run({"ingest"}, in, out, err), 0) << err.str();
  EXPECT_TRUE(fs::exists(dir_ / "out" / "manifest-ingest.json"));
  ::unsetenv("ARCHMINER_CONFIG");
}

TEST_F(Cli, TrainWritesModelAndMetrics) {
  for (const auto& step : {"ingest", "embed", "dict-expand", "vectorize"}) run_ok({step});
  run_ok({"train", "--algo", "svm"});
  const auto m = manifest("train");
  ASSERT_TRUE(m.outputs.count("model_svm"));
  const auto model = nlohmann::json::parse(slurp(dir_ / "out" / m.outputs.at("model_svm")));
  const auto vectorizer = Vectorizer::from_json(
      nlohmann::json::parse(slurp(dir_ / "out" / manifest("vectorize").outputs.at("vectorizer"))));
  EXPECT_EQ(model["vectorizer_fingerprint"], vectorizer.fingerprint());
  EXPECT_EQ(model["model"]["algorithm"], "svm");
  const auto metrics = nlohmann::json::parse(slurp(dir_ / "out" / m.outputs.at("metrics")));
  EXPECT_GE(metrics["svm"]["metrics"]["f_measure"].get<double>(), 0.9);
  run_ok({"train", "--algo", "dt"});
  EXPECT_TRUE(manifest("train").outputs.count("model_svm"));
  EXPECT_TRUE(manifest("train").outputs.count("model_dt"));
}

TEST_F(Cli, SeedTwiceGivesIdenticalManifests) {
  for (const auto& step : {"ingest", "embed", "dict-expand", "vectorize"}) run_ok({step, "--seed", "42"});
  run_ok({"train", "--algo", "rf", "--seed", "42"});
  std::map<std::string, std::string> first;
  for (const auto& e : fs::directory_iterator(dir_ / "out")) first[e.path().filename()] = slurp(e.path());
  fs::remove_all(dir_ / "out");
  for (const auto& step : {"ingest", "embed", "dict-expand", "vectorize"}) run_ok({step, "--seed", "42"});
  run_ok({"train", "--algo", "rf", "--seed", "42"});
  std::map<std::string, std::string> second;
  for (const auto& e : fs::directory_iterator(dir_ / "out")) second[e.path().filename()] = slurp(e.path());
  EXPECT_EQ(first, second);
  EXPECT_EQ(manifest("train").seed, 42u);
}

TEST_F(Cli, OtherSeedChangesEmbedding) {
  run_ok({"ingest"});
  run_ok({"embed", "--seed", "1"});
  const auto a = manifest("embed").output_hashes.at("embedding");
  run_ok({"embed", "--seed", "2"});
  EXPECT_NE(manifest("embed").output_hashes.at("embedding"), a);
}

TEST_F(Cli, EvaluateRefusesStaleVectorizer) {
  through_train();
  run_ok({"evaluate"});
  config("[vectorizer]\ntop_k = 25\n");
  run_ok({"vectorize"});
  const auto r = run({"evaluate"});
  EXPECT_EQ(r.code, cli::data_error);
  EXPECT_NE(r.err.find("trained with vectorizer"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("archminer train"), std::string::npos);
}

TEST_F(Cli, TamperedArtifactIsRejected) {
  through_train();
  write(dir_ / "out" / manifest("train").outputs.at("model_svm"), "{}");
  EXPECT_EQ(run({"classify"}).code, cli::data_error);
}

TEST_F(Cli, EvaluateAblationCoversAllAlgorithms) {
  through_train();
  const auto r = run({"evaluate", "--ablation"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto d = manifest("evaluate").details;
  EXPECT_EQ(d["ablation"].size(), 6u);
  EXPECT_EQ(d["evaluation"]["results"].size(), 6u);
}

TEST_F(Cli, ClassifyRanksPlantedPostsFirst) {
  through_train();
  auto input = archminer::testing::qa_at_corpus(5, 15, 404);
  for (auto& t : input.threads) t.question.id += 10000;
  run_ok({"classify", "--all", "--input", threads_file(input.threads, "twenty.jsonl").string()});
  const auto rows = candidates();
  ASSERT_EQ(rows.size(), 20u);
  std::set<PostId> planted, top;
  for (std::size_t i = 0; i < input.threads.size(); ++i)
    if (input.labels[i]) planted.insert(input.threads[i].question.id);
  for (std::size_t i = 0; i < 5; ++i) top.insert(rows[i]["post_id"].get<PostId>());
  EXPECT_EQ(top, planted);
  for (std::size_t i = 1; i < rows.size(); ++i)
    EXPECT_GE(rows[i - 1]["score"].get<double>(), rows[i]["score"].get<double>());
}

TEST_F(Cli, ClassifyThresholdAndEmptyCorpus) {
  through_train();
  run_ok({"classify", "--all"});
  const auto all = candidates();
  ASSERT_EQ(all.size(), 120u);
  const double t = all[10]["score"].get<double>();
  std::size_t expected = 0;
  for (const auto& r : all) expected += r["score"].get<double>() >= t;
  run_ok({"classify", "--threshold", std::to_string(t)});
  EXPECT_LE(candidates().size(), expected);
  EXPECT_GE(candidates().size() + 1, expected);
  for (const auto& r : candidates()) EXPECT_GE(r["score"].get<double>(), t - 1e-6);

  run_ok({"classify", "--input", threads_file({}, "empty.jsonl").string()});
  EXPECT_TRUE(candidates().empty());
  EXPECT_EQ(manifest("classify").details["mined"], 0);
}

// Queues five planted posts, all admitted by a threshold below every score.
class Review : public Cli {
 protected:
  void SetUp() override {
    Cli::SetUp();
    through_train();
    auto input = archminer::testing::qa_at_corpus(5, 0, 405);
    for (auto& t : input.threads) t.question.id += 20000;
    run_ok({"classify", "--threshold", "-1e9", "--input", threads_file(input.threads, "five.jsonl").string()});
    ASSERT_EQ(candidates().size(), 5u);
  }

  // Verdicts in queue order; every polarity prompt after a "y" is skipped.
  static std::string answers(const std::string& verdicts) {
    std::string s;
    for (char v : verdicts) {
      s += std::string(1, v) + "\n";
      if (v == 'y')
        for (int i = 0; i < 40; ++i) s += "s\n";
    }
    return s;
  }
};

TEST_F(Review, AcceptFourOfFiveGivesEightyPercent) {
  run_ok({"review"}, answers("yyyyn"));
  const auto r = run({"evaluate", "--performance"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("80.0%"), std::string::npos) << r.out;
}

TEST_F(Review, ResumesAfterInterrupt) {
  run_ok({"review"}, answers("yn") + "q\n");
  EXPECT_EQ(manifest("review").details["reviewed"], 2);
  const auto ids = candidates();
  const auto r = run({"review"}, "q\n");
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("post " + std::to_string(ids[2]["post_id"].get<PostId>())), std::string::npos) << r.out;
  EXPECT_EQ(r.out.find("post " + std::to_string(ids[0]["post_id"].get<PostId>())), std::string::npos);
  run_ok({"review"}, answers("nnn"));
  EXPECT_EQ(manifest("review").details["remaining"], 0);
}

TEST_F(Review, EndOfInputStopsCleanly) {
  const auto r = run({"review"}, "y\n");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(manifest("review").details["reviewed"], 1);
}

TEST_F(Review, PolarityComesOnlyFromAnswers) {
  std::string input = "y\n";
  for (int i = 0; i < 40; ++i) input += i % 2 ? "n\n" : "p\n";
  run_ok({"review", "--limit", "1"}, input);
  std::istringstream in(slurp(dir_ / "out" / "instances.jsonl"));
  auto store = InstanceStore::read_instances(in);
  std::istringstream log(slurp(dir_ / "out" / "polarity-log.jsonl"));
  store.replay_audit(log);
  ASSERT_GT(store.size(), 0u);
  for (const auto& i : store.instances()) {
    EXPECT_NE(i.polarity, Polarity::unspecified);
    EXPECT_EQ(i.polarity_source, PolaritySource::human);
  }
  EXPECT_EQ(store.history().size(), store.size());
  run_ok({"relate"});
  EXPECT_EQ(manifest("relate").details["polarized"], store.size());
}

TEST_F(Review, KappaBetweenTwoAnnotators) {
  run_ok({"review", "--annotator", "alice"}, answers("yyynn"));
  run_ok({"review", "--annotator", "bob"}, answers("yynny"));
  const auto r = run({"evaluate", "--kappa"});
  ASSERT_EQ(r.code, 0) << r.err;
  // Agreement on 3 of 5; both confirm 3 of 5: p_e = 0.52, kappa = (0.6 - 0.52) / 0.48.
  EXPECT_NEAR(manifest("evaluate").details["kappa"]["kappa"].get<double>(), 1.0 / 6, 1e-9);
  EXPECT_EQ(manifest("evaluate").details["kappa"]["posts"], 5);
  EXPECT_EQ(run({"evaluate", "--kappa", "--annotators", "alice", "carol"}).code, cli::missing_prerequisite);
}

TEST_F(Cli, RelateEmptyStoreWritesValidOutputs) {
  write(dir_ / "none.jsonl", "");
  run_ok({"relate", "--instances", (dir_ / "none.jsonl").string()});
  const auto m = manifest("relate");
  const auto matrix = slurp(dir_ / "out" / m.outputs.at("matrix"));
  EXPECT_EQ(std::count(matrix.begin(), matrix.end(), '\n'), 22);
  EXPECT_EQ(slurp(dir_ / "out" / m.outputs.at("instances")), "");
  const auto ledger = slurp(dir_ / "out" / m.outputs.at("ledger_csv"));
  EXPECT_EQ(ledger.find('+'), std::string::npos);
  run_ok({"diff-lit"});
  EXPECT_EQ(manifest("diff-lit").details["little_known"], 0);
}

TEST_F(Cli, RelateLedgerFormatting) {
  InstanceStore store;
  for (PostId p = 1; p <= 10; ++p) {
    QaAtInstance i;
    i.post_id = p;
    i.at = "Time out";
    i.qa = "Functional Suitability";
    store.add(i);
    store.record_polarity(i.key(), Polarity::positive, "alice", "t");
  }
  std::ostringstream inst, log;
  store.write_instances(inst);
  store.write_audit(log);
  write(dir_ / "inst.jsonl", inst.str());
  write(dir_ / "log.jsonl", log.str());
  run_ok({"relate", "--instances", (dir_ / "inst.jsonl").string(), "--polarity-log", (dir_ / "log.jsonl").string()});
  const auto csv = slurp(dir_ / "out" / manifest("relate").outputs.at("ledger_csv"));
  EXPECT_NE(csv.find("Time out,N/A,N/A,N/A,N/A,N/A,+ (10),N/A,N/A"), std::string::npos) << csv;
}

TEST_F(Cli, DiffOnMinedColumnIsLittleKnown) {
  const auto baseline = LiteratureBaseline::shipped();
  InstanceStore store;
  PostId p = 1;
  std::size_t mined = 0;
  for (const auto& [qa, e] : baseline.qualities())
    for (const auto* side : {&e.mined_benefit, &e.mined_hinder})
      for (const auto& at : *side) {
        if (!canonical_tactic(at)) continue;
        QaAtInstance i;
        i.post_id = p++;
        i.at = at;
        i.qa = qa;
        store.add(i);
        store.record_polarity(i.key(), side == &e.mined_benefit ? Polarity::positive : Polarity::negative, "a", "t");
        ++mined;
      }
  std::ostringstream inst, log;
  store.write_instances(inst);
  store.write_audit(log);
  write(dir_ / "inst.jsonl", inst.str());
  write(dir_ / "log.jsonl", log.str());
  run_ok({"relate", "--instances", (dir_ / "inst.jsonl").string(), "--polarity-log", (dir_ / "log.jsonl").string()});
  run_ok({"diff-lit"});
  const auto d = manifest("diff-lit").details;
  EXPECT_GT(mined, 10u);
  EXPECT_EQ(d["little_known"], mined);
  EXPECT_EQ(d["documented"], 0);
  EXPECT_EQ(d["contradicts"], 0);
}

TEST_F(Cli, ExportGraphFormatsAndReport) {
  through_train();
  for (const auto* f : {"gexf", "dot", "json"}) {
    run_ok({"export-graph", "--format", f});
    const auto file = manifest("export-graph").outputs.at("network");
    EXPECT_EQ(fs::path(file).extension(), std::string(".") + f);
  }
  EXPECT_EQ(run({"export-graph", "--format", "png"}).code, cli::usage);
  run_ok({"evaluate"});
  run_ok({"report"});
  const auto report = slurp(dir_ / "out" / manifest("report").outputs.at("report"));
  EXPECT_NE(report.find("| Algorithm | TP | FP | TN | FN | Precision | Recall | F-measure |"), std::string::npos);
  EXPECT_NE(report.find("| svm |"), std::string::npos);
}

TEST_F(Cli, ReportNeedsSomething) { EXPECT_EQ(run({"report"}).code, cli::missing_prerequisite); }

TEST_F(Cli, ManifestsUseRelativeFileNames) {
  run_ok({"ingest"});
  const auto text = slurp(dir_ / "out" / "manifest-ingest.json");
  EXPECT_EQ(text.find(dir_.string()), std::string::npos);
  const auto m = manifest("ingest");
  EXPECT_EQ(m.started_at, "2023-11-14T22:13:20Z");
  EXPECT_EQ(m.tool_version, "0.1.0");
  for (const auto& [name, file] : m.outputs) EXPECT_TRUE(fs::exists(dir_ / "out" / file)) << name;
}

}  // namespace
