#include <cctype>
#include <fstream>
#include <sstream>

#include "archminer/error.hpp"
#include "pipeline.hpp"

namespace archminer::cli {
namespace {

void append_line(const Workspace& ws, const std::string& file, const std::string& line) {
  std::ofstream out(ws.path(file), std::ios::app | std::ios::binary);
  out << line;
  if (!out) throw Error(ErrorKind::io, "cannot append to " + ws.path(file).string());
}

void touch(const Workspace& ws, const std::string& file) {
  if (!ws.exists(file)) append_line(ws, file, "");
}

// Reads one answer among `choices`, reprompting on anything else. Empty at end of input.
std::optional<char> ask(Context& ctx, const std::string& prompt, std::string_view choices) {
  std::string line;
  while (true) {
    ctx.out << prompt << std::flush;
    if (!std::getline(ctx.in, line)) {
      ctx.out << "\n";
      return std::nullopt;
    }
    const auto first = line.find_first_not_of(" \t\r");
    if (first != std::string::npos && line.find_first_not_of(" \t\r", first + 1) == std::string::npos &&
        choices.find(static_cast<char>(std::tolower(line[first]))) != std::string_view::npos)
      return static_cast<char>(std::tolower(line[first]));
    ctx.out << "please answer one of [" << choices << "]\n";
  }
}

std::string excerpt(const Thread& t) {
  std::string body;
  for (const char c : strip_html(strip_code(t.question.body_html))) {
    const bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (space && (body.empty() || body.back() == ' ')) continue;
    body.push_back(space ? ' ' : c);
  }
  if (body.size() > 240) body = body.substr(0, 237) + "...";
  return t.question.title.value_or("(untitled)") + "\n  " + body;
}

}  // namespace

int cmd_review(Context& ctx, std::size_t limit) {
  auto m = ctx.begin("review");
  const auto& ws = ctx.workspace;
  const auto classify = ws.require("classify");
  const auto candidates_text = ws.require_output("classify", "candidates");
  const auto threads = threads_from_jsonl(ws.require_output("classify", "corpus"));
  std::map<PostId, const Thread*> by_id;
  for (const auto& t : threads) by_id[t.question.id] = &t;

  const auto stoplist = ctx.stoplist();
  const auto seeds = ctx.seeds(stoplist);
  std::optional<Dictionary> dict;
  if (ws.manifest("dict-expand"))
    dict = Dictionary::from_json(nlohmann::json::parse(ws.require_output("dict-expand", "dictionary")));
  const TermMatcher matcher(seeds, dict ? &*dict : nullptr);

  const auto annotator = ctx.config.annotator;
  const auto verdicts_name = verdict_file(annotator);
  VerdictLog own;
  if (ws.exists(verdicts_name)) {
    std::istringstream in(ws.read(verdicts_name));
    own = VerdictLog::load(in);
  }
  auto store = load_instance_store(ws);
  touch(ws, verdicts_name);
  touch(ws, kInstancesFile);
  touch(ws, kPolarityLogFile);

  std::vector<PostId> queue;
  std::istringstream lines(candidates_text);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    if (!j.value("candidate", true)) continue;
    const auto id = j.at("post_id").get<PostId>();
    if (!own.has_verdict(id, annotator)) queue.push_back(id);
  }

  std::size_t reviewed = 0, confirmed = 0, polarized = 0;
  bool quit = false;
  for (const auto id : queue) {
    if (quit || (limit && reviewed >= limit)) break;
    const auto it = by_id.find(id);
    if (it == by_id.end()) continue;
    const Thread& thread = *it->second;
    ctx.out << "\npost " << id << ": " << excerpt(thread) << "\n";
    const auto answer = ask(ctx, "does this post discuss a QA-AT relationship? [y/n/q] ", "ynq");
    if (!answer || *answer == 'q') break;
    VerdictRecord record{id, *answer == 'y' ? Verdict::confirmed_qa_at : Verdict::rejected, annotator, timestamp_now()};
    own.add(record);
    std::ostringstream rec;
    VerdictLog::append(rec, record);
    append_line(ws, verdicts_name, rec.str());
    ++reviewed;
    if (record.verdict != Verdict::confirmed_qa_at) continue;
    ++confirmed;

    for (auto instance : detect_instances(thread, matcher)) {
      const auto key = instance.key();
      if (store.add(instance)) append_line(ws, kInstancesFile, instance.to_json().dump() + "\n");
      if (store.get(key).polarity_source == PolaritySource::human) continue;
      ctx.out << "  " << instance.at << " -> " << instance.qa << " (\"" << instance.at_evidence.phrase << "\", \""
              << instance.qa_evidence.phrase << "\")\n";
      const auto p = ask(ctx, "  does the tactic benefit or hinder the attribute? [p/n/s/q] ", "pnsq");
      if (!p || *p == 'q') {
        quit = true;
        break;
      }
      if (*p == 's') continue;
      store.record_polarity(key, *p == 'p' ? Polarity::positive : Polarity::negative, annotator, timestamp_now());
      std::ostringstream ev;
      InstanceStore::append_event(ev, store.history().back());
      append_line(ws, kPolarityLogFile, ev.str());
      ++polarized;
    }
  }

  std::size_t remaining = 0;
  for (const auto id : queue) remaining += !own.has_verdict(id, annotator);
  m.inputs["candidates"] = classify.output_hashes.at("candidates");
  m.outputs["verdicts"] = verdicts_name;
  m.outputs["instances"] = kInstancesFile;
  m.outputs["polarity_log"] = kPolarityLogFile;
  m.details = {{"annotator", annotator},
               {"reviewed", reviewed},
               {"confirmed", confirmed},
               {"polarized", polarized},
               {"remaining", remaining}};
  ctx.out << "review: " << reviewed << " reviewed, " << confirmed << " confirmed, " << polarized
          << " polarities recorded, " << remaining << " left\n";
  ctx.finish(m);
  return ok;
}

}  // namespace archminer::cli
