#include "archminer/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <map>
#include <ostream>
#include <unordered_map>
#include <unordered_set>

#include "archminer/error.hpp"
#include "archminer/preprocess.hpp"
#include "text_util.hpp"

namespace archminer {

std::string_view to_string(PostKind kind) noexcept { return kind == PostKind::question ? "question" : "answer"; }

void validate(const Post& post) {
  if (post.id == 0) throw Error(ErrorKind::invalid_argument, "post id must be positive");
  if ((post.kind == PostKind::answer) != post.parent_id.has_value())
    throw Error(ErrorKind::invalid_argument, "post " + std::to_string(post.id) + ": parent_id present iff answer");
  if (post.kind == PostKind::question && !post.title)
    throw Error(ErrorKind::invalid_argument, "question " + std::to_string(post.id) + " has no title");
}

std::optional<DumpFormat> parse_dump_format(std::string_view name) noexcept {
  if (name == "se_xml" || name == "xml") return DumpFormat::se_xml;
  if (name == "jsonl") return DumpFormat::jsonl;
  return std::nullopt;
}

std::vector<std::string> parse_tag_list(std::string_view encoded) {
  std::vector<std::string> tags;
  std::size_t pos = 0;
  while ((pos = encoded.find('<', pos)) != std::string_view::npos) {
    const auto close = encoded.find('>', pos + 1);
    if (close == std::string_view::npos) break;
    auto tag = detail::to_lower(detail::trim(encoded.substr(pos + 1, close - pos - 1)));
    if (!tag.empty()) tags.push_back(std::move(tag));
    pos = close + 1;
  }
  // Some exports use "|a|b|" instead of angle brackets.
  if (tags.empty() && encoded.find('|') != std::string_view::npos) {
    for (auto part : detail::split(encoded, '|')) {
      auto tag = detail::to_lower(detail::trim(part));
      if (!tag.empty()) tags.push_back(std::move(tag));
    }
  }
  return tags;
}

namespace {

template <typename Int>
std::optional<Int> parse_int(std::string_view s) {
  Int value{};
  s = detail::trim(s);
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc{} || ptr != end) return std::nullopt;
  return value;
}

// XML character references and the five predefined entities.
std::string decode_xml_entities(std::string_view s, bool& ok) {
  std::string out;
  out.reserve(s.size());
  ok = true;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '&') {
      out.push_back(s[i]);
      continue;
    }
    const auto semi = s.find(';', i);
    if (semi == std::string_view::npos || semi - i > 12) {
      ok = false;
      out.push_back('&');
      continue;
    }
    const auto name = s.substr(i + 1, semi - i - 1);
    if (auto decoded = detail::decode_entity(name)) {
      out += *decoded;
      i = semi;
    } else {
      ok = false;
      out.push_back('&');
    }
  }
  return out;
}

struct RowScan {
  std::map<std::string, std::string, std::less<>> attributes;
  std::string error;
};

// Parses the attribute list of "<row ... />" starting after the element name.
RowScan scan_attributes(std::string_view text) {
  RowScan scan;
  std::size_t i = 0;
  auto skip_ws = [&] {
    while (i < text.size() && detail::is_space(text[i])) ++i;
  };
  for (;;) {
    skip_ws();
    if (i >= text.size()) {
      scan.error = "unterminated row element";
      return scan;
    }
    if (text[i] == '/' && i + 1 < text.size() && text[i + 1] == '>') return scan;
    if (text[i] == '>') return scan;
    const auto name_start = i;
    while (i < text.size() && !detail::is_space(text[i]) && text[i] != '=' && text[i] != '/' && text[i] != '>') ++i;
    const auto name = text.substr(name_start, i - name_start);
    skip_ws();
    if (name.empty() || i >= text.size() || text[i] != '=') {
      scan.error = "expected '=' after attribute name '" + std::string(name) + "'";
      return scan;
    }
    ++i;
    skip_ws();
    if (i >= text.size() || (text[i] != '"' && text[i] != '\'')) {
      scan.error = "attribute '" + std::string(name) + "' is not quoted";
      return scan;
    }
    const char quote = text[i++];
    const auto value_end = text.find(quote, i);
    if (value_end == std::string_view::npos) {
      scan.error = "unterminated value for attribute '" + std::string(name) + "'";
      return scan;
    }
    bool ok = true;
    auto value = decode_xml_entities(text.substr(i, value_end - i), ok);
    if (!ok) {
      scan.error = "bad entity in attribute '" + std::string(name) + "'";
      return scan;
    }
    scan.attributes.emplace(std::string(name), std::move(value));
    i = value_end + 1;
  }
}

// True once the accumulated text holds a complete "<row .../>" element, i.e.
// a '/>' or '>' outside quoted attribute values.
bool row_complete(std::string_view text) {
  char quote = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quote) {
      if (c == quote) quote = 0;
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '>') {
      return true;
    }
  }
  return false;
}

}  // namespace

PostReader::PostReader(std::istream& input, DumpFormat format, ParseMode mode)
    : input_(&input), format_(format), mode_(mode) {}

void PostReader::report(std::size_t line, const std::string& message) {
  if (mode_ == ParseMode::strict) throw MalformedInput(line, message);
  issues_.push_back({line, message});
}

std::optional<Post> PostReader::next() { return format_ == DumpFormat::se_xml ? next_xml() : next_jsonl(); }

std::optional<Post> PostReader::next_xml() {
  std::string line;
  while (std::getline(*input_, line)) {
    ++line_;
    const auto first_line = line_;
    auto view = detail::trim(line);
    if (view.empty()) continue;
    if (!view.starts_with("<row") || (view.size() > 4 && !detail::is_space(view[4]) && view[4] != '/')) {
      // Prolog, <posts> wrapper and other elements carry no posts.
      if (view.front() != '<') report(first_line, "unexpected text outside of a row element");
      continue;
    }
    std::string row(view.substr(4));
    while (!row_complete(row)) {
      std::string more;
      if (!std::getline(*input_, more)) break;
      ++line_;
      row.push_back('\n');
      row += more;
    }
    auto scan = scan_attributes(row);
    if (!scan.error.empty()) {
      report(first_line, scan.error);
      continue;
    }
    auto& attrs = scan.attributes;
    auto get = [&](std::string_view key) -> const std::string* {
      auto it = attrs.find(key);
      return it == attrs.end() ? nullptr : &it->second;
    };
    const auto* id_text = get("Id");
    const auto* type_text = get("PostTypeId");
    if (!id_text || !type_text) {
      report(first_line, "row lacks Id or PostTypeId");
      continue;
    }
    const auto id = parse_int<PostId>(*id_text);
    const auto type = parse_int<int>(*type_text);
    if (!id || *id == 0 || !type) {
      report(first_line, "row has a non-numeric or zero Id/PostTypeId");
      continue;
    }
    if (*type != 1 && *type != 2) {
      ++skipped_;
      continue;
    }
    Post post;
    post.id = *id;
    post.kind = *type == 1 ? PostKind::question : PostKind::answer;
    if (const auto* body = get("Body")) post.body_html = *body;
    if (const auto* score = get("Score")) {
      auto value = parse_int<std::int64_t>(*score);
      if (!value) {
        report(first_line, "non-numeric Score");
        continue;
      }
      post.score = *value;
    }
    if (const auto* created = get("CreationDate")) post.created_at = *created;
    if (const auto* accepted = get("AcceptedAnswerId")) {
      auto value = parse_int<PostId>(*accepted);
      if (!value) {
        report(first_line, "non-numeric AcceptedAnswerId");
        continue;
      }
      post.accepted_answer_id = *value;
    }
    if (post.kind == PostKind::question) {
      const auto* title = get("Title");
      post.title = title ? *title : std::string{};
      if (const auto* tags = get("Tags")) post.tags = parse_tag_list(*tags);
      if (const auto* count = get("AnswerCount")) {
        auto value = parse_int<std::uint32_t>(*count);
        if (!value) {
          report(first_line, "non-numeric AnswerCount");
          continue;
        }
        post.answer_count = *value;
      }
    } else {
      const auto* parent = get("ParentId");
      auto value = parent ? parse_int<PostId>(*parent) : std::nullopt;
      if (!value) {
        report(first_line, "answer row lacks a numeric ParentId");
        continue;
      }
      post.parent_id = *value;
    }
    return post;
  }
  return std::nullopt;
}

std::optional<Post> PostReader::next_jsonl() {
  std::string line;
  while (std::getline(*input_, line)) {
    ++line_;
    if (detail::trim(line).empty()) continue;
    try {
      auto post = post_from_json(nlohmann::json::parse(line));
      return post;
    } catch (const nlohmann::json::exception& e) {
      report(line_, e.what());
    } catch (const MalformedInput&) {
      throw;
    } catch (const Error& e) {
      report(line_, e.what());
    }
  }
  return std::nullopt;
}

std::vector<Post> read_posts(std::istream& input, DumpFormat format, ParseMode mode) {
  PostReader reader(input, format, mode);
  std::vector<Post> posts;
  while (auto post = reader.next()) posts.push_back(std::move(*post));
  return posts;
}

nlohmann::ordered_json to_json(const Post& post) {
  nlohmann::ordered_json j;
  j["id"] = post.id;
  j["kind"] = to_string(post.kind);
  if (post.parent_id) j["parent_id"] = *post.parent_id;
  if (post.title) j["title"] = *post.title;
  j["body_html"] = post.body_html;
  if (post.kind == PostKind::question) j["tags"] = post.tags;
  j["score"] = post.score;
  if (post.kind == PostKind::question) j["answer_count"] = post.answer_count;
  if (post.accepted_answer_id) j["accepted_answer_id"] = *post.accepted_answer_id;
  j["created_at"] = post.created_at;
  return j;
}

Post post_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorKind::malformed_input, "post line is not a JSON object");
  Post post;
  post.id = j.at("id").get<PostId>();
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "question") {
    post.kind = PostKind::question;
  } else if (kind == "answer") {
    post.kind = PostKind::answer;
  } else {
    throw Error(ErrorKind::malformed_input, "unknown post kind '" + kind + "'");
  }
  if (auto it = j.find("parent_id"); it != j.end() && !it->is_null()) post.parent_id = it->get<PostId>();
  if (auto it = j.find("title"); it != j.end() && !it->is_null()) post.title = it->get<std::string>();
  post.body_html = j.value("body_html", std::string{});
  if (auto it = j.find("tags"); it != j.end() && !it->is_null()) {
    for (const auto& tag : *it) post.tags.push_back(detail::to_lower(tag.get<std::string>()));
  }
  post.score = j.value("score", std::int64_t{0});
  post.answer_count = j.value("answer_count", std::uint32_t{0});
  if (auto it = j.find("accepted_answer_id"); it != j.end() && !it->is_null())
    post.accepted_answer_id = it->get<PostId>();
  post.created_at = j.value("created_at", std::string{});
  validate(post);
  return post;
}

void write_jsonl(std::ostream& out, std::span<const Post> posts) {
  for (const auto& post : posts)
    out << to_json(post).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
}

void write_jsonl(std::ostream& out, std::span<const Thread> threads) {
  for (const auto& thread : threads) {
    write_jsonl(out, std::span<const Post>(&thread.question, 1));
    write_jsonl(out, std::span<const Post>(thread.answers));
  }
}

ThreadAssembly assemble_threads(std::span<const Post> posts) {
  ThreadAssembly result;
  std::unordered_map<PostId, std::size_t> thread_of;
  for (const auto& post : posts) {
    if (post.kind == PostKind::question && !thread_of.count(post.id)) {
      thread_of.emplace(post.id, result.threads.size());
      result.threads.push_back(Thread{post, {}});
    }
  }
  std::unordered_set<PostId> seen_answers;
  for (const auto& post : posts) {
    if (post.kind != PostKind::answer) continue;
    if (!seen_answers.insert(post.id).second) continue;
    auto it = post.parent_id ? thread_of.find(*post.parent_id) : thread_of.end();
    if (it == thread_of.end()) {
      result.orphans.push_back(post);
    } else {
      result.threads[it->second].answers.push_back(post);
    }
  }
  return result;
}

std::vector<Thread> filter_threads(std::span<const Thread> threads, const CorpusFilter& filter, FilterStats& stats) {
  stats = FilterStats{};
  stats.input = threads.size();
  std::vector<Thread> kept;
  for (const auto& thread : threads) {
    if (thread.answers.size() < filter.min_answers) continue;
    ++stats.after_answers;
    if (filter.require_positive_score && thread.question.score <= 0) continue;
    ++stats.after_score;
    if (!filter.required_tags.empty()) {
      const auto& tags = thread.question.tags;
      const bool hit =
          std::any_of(tags.begin(), tags.end(), [&](const std::string& t) { return filter.required_tags.count(t); });
      if (!hit) continue;
    }
    ++stats.after_tags;
    if (filter.exclude_code_in_question && contains_code_block(thread.question.body_html)) continue;
    ++stats.after_code;
    kept.push_back(thread);
  }
  return kept;
}

std::vector<Thread> filter_threads(std::span<const Thread> threads, const CorpusFilter& filter) {
  FilterStats stats;
  return filter_threads(threads, filter, stats);
}

}  // namespace archminer
