#pragma once

// Text preprocessing: code stripping, HTML stripping, tokenization, stop word
// removal and Porter stemming, composed per thread into a TokenizedDoc.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "archminer/corpus.hpp"

namespace archminer {

struct TokenizedDoc {
  PostId post_id = 0;
  std::vector<std::string> tokens;
  std::map<std::string, std::uint32_t> token_counts;

  std::size_t length() const noexcept { return tokens.size(); }

  static TokenizedDoc from_tokens(PostId post_id, std::vector<std::string> tokens);

  bool operator==(const TokenizedDoc&) const = default;
};

class StopList {
 public:
  // Throws Error(invalid_argument) unless the list is non-empty and contains
  // "the", "to", "of" and "is".
  explicit StopList(std::set<std::string> words);

  static StopList shipped();
  // One word per line, '#' starts a comment.
  static StopList load(std::istream& in);

  bool contains(std::string_view word) const { return words_.count(std::string(word)) != 0; }
  const std::set<std::string>& words() const noexcept { return words_; }

 private:
  std::set<std::string> words_;
};

// Stemmed noun forms. Loading stems each listed word.
class NounLexicon {
 public:
  NounLexicon() = default;
  explicit NounLexicon(std::unordered_set<std::string> stems) : stems_(std::move(stems)) {}

  static NounLexicon shipped();
  static NounLexicon load(std::istream& in);

  bool contains(const std::string& stem) const { return stems_.count(stem) != 0; }
  std::size_t size() const noexcept { return stems_.size(); }

 private:
  std::unordered_set<std::string> stems_;
};

// Reads a word-list file: one entry per line, blank lines and '#' comments
// ignored, entries trimmed and lowercased.
std::vector<std::string> read_word_list(std::istream& in);

// A <pre> or <code> element whose content spans two or more lines or at least
// 80 characters. Unclosed elements do not count.
bool contains_code_block(std::string_view html);

// Removes every <pre>/<code> element, tags included. Unclosed elements are left.
std::string strip_code(std::string_view html);

// Drops tags (block-level elements become a single space, inline ones
// vanish) and decodes character entities. Markup '<' and '>' never survive;
// the only '<'/'>' in the output come from decoded entities.
std::string strip_html(std::string_view html);

// Maximal runs of ASCII letters, lowercased.
std::vector<std::string> tokenize(std::string_view text);

std::vector<std::string> remove_stopwords(std::span<const std::string> tokens, const StopList& stoplist);

std::string porter_stem(std::string_view word);
std::vector<std::string> stem(std::span<const std::string> tokens);

std::vector<std::string> noun_filter(std::span<const std::string> tokens, const NounLexicon& nouns);

struct PreprocessOptions {
  // Set only for the dictionary-training corpus.
  const NounLexicon* noun_filter = nullptr;
};

// Full pipeline on free text that may contain HTML. Stems shorter than three
// characters are dropped after stemming so the token invariant holds.
std::vector<std::string> preprocess_text(std::string_view html, const StopList& stoplist,
                                         const PreprocessOptions& options = {});

// Title, question body and answer bodies through the full pipeline.
// Throws Error(empty_document) when nothing survives.
TokenizedDoc preprocess_thread(const Thread& thread, const StopList& stoplist, const PreprocessOptions& options = {});

// Stemmed tokens with stop words and short words kept, for phrase matching.
std::vector<std::string> surface_stems(std::string_view html);
std::vector<std::string> surface_stems(const Thread& thread);

// TokenizedDoc cache, one {"post_id", "tokens"} object per line.
void write_doc_cache(std::ostream& out, std::span<const TokenizedDoc> docs);
std::vector<TokenizedDoc> read_doc_cache(std::istream& in);

}  // namespace archminer
