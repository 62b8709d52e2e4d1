#pragma once

// Q&A corpus model: posts, threads, dump parsing and thread filtering.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace archminer {

using PostId = std::uint64_t;

enum class PostKind { question, answer };

std::string_view to_string(PostKind kind) noexcept;

struct Post {
  PostId id = 0;
  PostKind kind = PostKind::question;
  std::optional<PostId> parent_id;  // answers only
  std::optional<std::string> title;  // questions only
  std::string body_html;
  std::vector<std::string> tags;  // questions only, lowercase
  std::int64_t score = 0;
  std::uint32_t answer_count = 0;
  std::optional<PostId> accepted_answer_id;
  std::string created_at;

  bool operator==(const Post&) const = default;
};

// Throws Error(invalid_argument) when the kind/parent/title invariants fail.
void validate(const Post& post);

struct Thread {
  Post question;
  std::vector<Post> answers;
};

struct CorpusFilter {
  std::size_t min_answers = 1;
  bool require_positive_score = true;
  std::set<std::string> required_tags;  // empty: no tag filter
  bool exclude_code_in_question = false;
};

enum class DumpFormat { se_xml, jsonl };
enum class ParseMode { lenient, strict };

std::optional<DumpFormat> parse_dump_format(std::string_view name) noexcept;

struct ParseIssue {
  std::size_t line = 0;
  std::string message;
};

// Streaming reader over a dump. Memory use is bounded by the largest row,
// not the file. In strict mode the first bad row throws MalformedInput; in
// lenient mode it is recorded in issues() and skipped.
class PostReader {
 public:
  PostReader(std::istream& input, DumpFormat format, ParseMode mode = ParseMode::lenient);

  std::optional<Post> next();

  const std::vector<ParseIssue>& issues() const noexcept { return issues_; }
  // Rows of a post type other than question/answer.
  std::size_t skipped() const noexcept { return skipped_; }

 private:
  std::optional<Post> next_xml();
  std::optional<Post> next_jsonl();
  void report(std::size_t line, const std::string& message);

  std::istream* input_;
  DumpFormat format_;
  ParseMode mode_;
  std::size_t line_ = 0;
  std::vector<ParseIssue> issues_;
  std::size_t skipped_ = 0;
};

std::vector<Post> read_posts(std::istream& input, DumpFormat format, ParseMode mode = ParseMode::lenient);

// "<a><b>" -> {"a", "b"}, lowercased.
std::vector<std::string> parse_tag_list(std::string_view encoded);

nlohmann::ordered_json to_json(const Post& post);
Post post_from_json(const nlohmann::json& j);
void write_jsonl(std::ostream& out, std::span<const Post> posts);
void write_jsonl(std::ostream& out, std::span<const Thread> threads);

struct ThreadAssembly {
  std::vector<Thread> threads;  // in order of first appearance of the question
  std::vector<Post> orphans;    // answers whose parent question is absent
};

// Later duplicates of a question or answer id are dropped.
ThreadAssembly assemble_threads(std::span<const Post> posts);

std::vector<Thread> filter_threads(std::span<const Thread> threads, const CorpusFilter& filter);

// Counts retained after each enabled filter stage, in application order.
struct FilterStats {
  std::size_t input = 0;
  std::size_t after_answers = 0;
  std::size_t after_score = 0;
  std::size_t after_tags = 0;
  std::size_t after_code = 0;
};

std::vector<Thread> filter_threads(std::span<const Thread> threads, const CorpusFilter& filter, FilterStats& stats);

}  // namespace archminer
