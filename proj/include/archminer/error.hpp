#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace archminer {

enum class ErrorKind {
  malformed_input,
  empty_document,
  empty_corpus,
  empty_vocabulary,
  unknown_term,
  degenerate_labels,
  non_finite_loss,
  length_mismatch,
  invalid_total,
  unknown_instance,
  duplicate_verdict,
  invalid_argument,
  io,
  missing_artifact,
  fingerprint_mismatch,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Every failure the library reports is an archminer::Error; callers switch on
// kind() instead of catching a zoo of exception types.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Raised for unparseable dump rows. `line` is 1-based.
class MalformedInput : public Error {
 public:
  MalformedInput(std::size_t line, const std::string& message);

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace archminer
