#include "archminer/preprocess.hpp"

#include <algorithm>
#include <array>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "archminer/embedded_data.hpp"
#include "archminer/error.hpp"
#include "text_util.hpp"

namespace archminer {

TokenizedDoc TokenizedDoc::from_tokens(PostId post_id, std::vector<std::string> tokens) {
  TokenizedDoc doc;
  doc.post_id = post_id;
  doc.tokens = std::move(tokens);
  for (const auto& t : doc.tokens) ++doc.token_counts[t];
  return doc;
}

std::vector<std::string> read_word_list(std::istream& in) {
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = detail::trim(view);
    if (!view.empty()) words.push_back(detail::to_lower(view));
  }
  return words;
}

StopList::StopList(std::set<std::string> words) : words_(std::move(words)) {
  if (words_.empty()) throw Error(ErrorKind::invalid_argument, "stop list is empty");
  for (const char* required : {"the", "to", "of", "is"}) {
    if (!words_.count(required))
      throw Error(ErrorKind::invalid_argument, std::string("stop list lacks '") + required + "'");
  }
}

StopList StopList::load(std::istream& in) {
  auto words = read_word_list(in);
  return StopList(std::set<std::string>(words.begin(), words.end()));
}

StopList StopList::shipped() {
  std::istringstream in{std::string(embedded_data("stopwords"))};
  return load(in);
}

NounLexicon NounLexicon::load(std::istream& in) {
  std::unordered_set<std::string> stems;
  for (const auto& word : read_word_list(in)) {
    if (std::all_of(word.begin(), word.end(), detail::is_ascii_letter)) stems.insert(porter_stem(word));
  }
  return NounLexicon(std::move(stems));
}

NounLexicon NounLexicon::shipped() {
  static const NounLexicon lexicon = [] {
    std::istringstream in{std::string(embedded_data("nouns"))};
    return load(in);
  }();
  return lexicon;
}

namespace {

bool iequals_at(std::string_view s, std::size_t pos, std::string_view word) {
  if (pos + word.size() > s.size()) return false;
  for (std::size_t i = 0; i < word.size(); ++i)
    if (detail::lower(s[pos + i]) != word[i]) return false;
  return true;
}

// True when s[pos..] opens element `name` ("<pre", "<pre class=..", not "<prefix").
bool opens_element(std::string_view s, std::size_t pos, std::string_view name) {
  if (s[pos] != '<' || !iequals_at(s, pos + 1, name)) return false;
  const auto after = pos + 1 + name.size();
  return after < s.size() && (s[after] == '>' || s[after] == '/' || detail::is_space(s[after]));
}

bool closes_element(std::string_view s, std::size_t pos, std::string_view name) {
  if (pos + 2 >= s.size() || s[pos] != '<' || s[pos + 1] != '/' || !iequals_at(s, pos + 2, name)) return false;
  auto after = pos + 2 + name.size();
  while (after < s.size() && detail::is_space(s[after])) ++after;
  return after < s.size() && s[after] == '>';
}

struct CodeSpan {
  std::size_t begin = 0;          // '<' of the open tag
  std::size_t content_begin = 0;  // after the open tag's '>'
  std::size_t content_end = 0;    // '<' of the close tag
  std::size_t end = 0;            // past the close tag's '>'
};

constexpr std::array<std::string_view, 2> kCodeElements{"pre", "code"};

// Finds the next closed, outermost <pre>/<code> element at or after `from`.
// Self-closing and unclosed opens are skipped.
std::optional<CodeSpan> next_code_span(std::string_view s, std::size_t from) {
  for (std::size_t pos = s.find('<', from); pos != std::string_view::npos; pos = s.find('<', pos + 1)) {
    for (auto name : kCodeElements) {
      if (!opens_element(s, pos, name)) continue;
      const auto open_end = s.find('>', pos);
      if (open_end == std::string_view::npos) return std::nullopt;
      if (s[open_end - 1] == '/') break;  // <code/>
      int depth = 1;
      for (auto q = s.find('<', open_end + 1); q != std::string_view::npos; q = s.find('<', q + 1)) {
        if (opens_element(s, q, name)) {
          ++depth;
        } else if (closes_element(s, q, name) && --depth == 0) {
          CodeSpan span;
          span.begin = pos;
          span.content_begin = open_end + 1;
          span.content_end = q;
          span.end = s.find('>', q) + 1;
          return span;
        }
      }
      break;  // unclosed: treat as text
    }
  }
  return std::nullopt;
}

bool is_inline_element(std::string_view name) {
  static constexpr std::array<std::string_view, 20> kInline{"a",   "abbr", "b",     "big",  "del",  "em",   "font",
                                                            "i",   "ins",  "kbd",   "mark", "s",    "small", "span",
                                                            "strike", "strong", "sub", "sup", "tt", "u"};
  return std::find(kInline.begin(), kInline.end(), name) != kInline.end();
}

}  // namespace

bool contains_code_block(std::string_view html) {
  std::size_t from = 0;
  while (auto span = next_code_span(html, from)) {
    const auto content = html.substr(span->content_begin, span->content_end - span->content_begin);
    if (content.find('\n') != std::string_view::npos || content.size() >= 80) return true;
    from = span->end;
  }
  return false;
}

std::string strip_code(std::string_view html) {
  std::string out;
  out.reserve(html.size());
  std::size_t from = 0;
  while (auto span = next_code_span(html, from)) {
    out.append(html.substr(from, span->begin - from));
    from = span->end;
  }
  out.append(html.substr(from));
  return out;
}

std::string strip_html(std::string_view html) {
  std::string out;
  out.reserve(html.size());
  std::size_t i = 0;
  while (i < html.size()) {
    const char c = html[i];
    if (c == '<') {
      if (html.substr(i, 4) == "<!--") {
        const auto end = html.find("-->", i + 4);
        out.push_back(' ');
        i = end == std::string_view::npos ? html.size() : end + 3;
        continue;
      }
      const bool tag_start = i + 1 < html.size() && (detail::is_ascii_letter(html[i + 1]) || html[i + 1] == '/' ||
                                                     html[i + 1] == '!' || html[i + 1] == '?');
      const auto close = tag_start ? html.find('>', i + 1) : std::string_view::npos;
      if (close == std::string_view::npos) {
        out.push_back(' ');
        ++i;
        continue;
      }
      auto name_begin = i + 1;
      if (html[name_begin] == '/') ++name_begin;
      auto name_end = name_begin;
      while (name_end < close && detail::is_ascii_letter(html[name_end])) ++name_end;
      while (name_end < close && html[name_end] >= '0' && html[name_end] <= '9') ++name_end;
      const auto name = detail::to_lower(html.substr(name_begin, name_end - name_begin));
      if (!is_inline_element(name)) out.push_back(' ');
      i = close + 1;
      continue;
    }
    if (c == '>') {
      out.push_back(' ');
      ++i;
      continue;
    }
    if (c == '&') {
      const auto semi = html.find(';', i + 1);
      if (semi != std::string_view::npos && semi - i <= 12) {
        if (auto decoded = detail::decode_entity(html.substr(i + 1, semi - i - 1))) {
          out += *decoded;
          i = semi + 1;
          continue;
        }
      }
    }
    out.push_back(c);
    ++i;
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!detail::is_ascii_letter(text[i])) {
      ++i;
      continue;
    }
    std::string token;
    while (i < text.size() && detail::is_ascii_letter(text[i])) token.push_back(detail::lower(text[i++]));
    tokens.push_back(std::move(token));
  }
  return tokens;
}

std::vector<std::string> remove_stopwords(std::span<const std::string> tokens, const StopList& stoplist) {
  std::vector<std::string> kept;
  kept.reserve(tokens.size());
  for (const auto& t : tokens)
    if (t.size() > 2 && !stoplist.contains(t)) kept.push_back(t);
  return kept;
}

std::vector<std::string> stem(std::span<const std::string> tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(porter_stem(t));
  return out;
}

std::vector<std::string> noun_filter(std::span<const std::string> tokens, const NounLexicon& nouns) {
  std::vector<std::string> kept;
  for (const auto& t : tokens)
    if (nouns.contains(t)) kept.push_back(t);
  return kept;
}

namespace {

std::vector<std::string> finish_tokens(std::vector<std::string> tokens, const StopList& stoplist,
                                       const PreprocessOptions& options) {
  auto stems = stem(remove_stopwords(tokens, stoplist));
  std::erase_if(stems, [](const std::string& s) { return s.size() < 3; });
  if (options.noun_filter) stems = noun_filter(stems, *options.noun_filter);
  return stems;
}

void append(std::vector<std::string>& into, std::vector<std::string> more) {
  into.insert(into.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
}

}  // namespace

std::vector<std::string> preprocess_text(std::string_view html, const StopList& stoplist,
                                         const PreprocessOptions& options) {
  return finish_tokens(tokenize(strip_html(strip_code(html))), stoplist, options);
}

TokenizedDoc preprocess_thread(const Thread& thread, const StopList& stoplist, const PreprocessOptions& options) {
  std::vector<std::string> tokens;
  if (thread.question.title) append(tokens, finish_tokens(tokenize(*thread.question.title), stoplist, options));
  append(tokens, preprocess_text(thread.question.body_html, stoplist, options));
  for (const auto& answer : thread.answers) append(tokens, preprocess_text(answer.body_html, stoplist, options));
  if (tokens.empty())
    throw Error(ErrorKind::empty_document, "thread " + std::to_string(thread.question.id) + " has no tokens left");
  return TokenizedDoc::from_tokens(thread.question.id, std::move(tokens));
}

std::vector<std::string> surface_stems(std::string_view html) { return stem(tokenize(strip_html(strip_code(html)))); }

std::vector<std::string> surface_stems(const Thread& thread) {
  std::vector<std::string> tokens;
  if (thread.question.title) append(tokens, stem(tokenize(*thread.question.title)));
  append(tokens, surface_stems(thread.question.body_html));
  for (const auto& answer : thread.answers) append(tokens, surface_stems(answer.body_html));
  return tokens;
}

void write_doc_cache(std::ostream& out, std::span<const TokenizedDoc> docs) {
  for (const auto& doc : docs) {
    nlohmann::ordered_json j;
    j["post_id"] = doc.post_id;
    j["tokens"] = doc.tokens;
    out << j.dump() << '\n';
  }
}

std::vector<TokenizedDoc> read_doc_cache(std::istream& in) {
  std::vector<TokenizedDoc> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      docs.push_back(TokenizedDoc::from_tokens(j.at("post_id").get<PostId>(), j.at("tokens").get<std::vector<std::string>>()));
    } catch (const nlohmann::json::exception& e) {
      throw MalformedInput(line_no, e.what());
    }
  }
  return docs;
}

}  // namespace archminer
