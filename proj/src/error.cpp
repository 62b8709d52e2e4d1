#include "archminer/error.hpp"

#include "archminer/fingerprint.hpp"

namespace archminer {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::malformed_input: return "MalformedInput";
    case ErrorKind::empty_document: return "EmptyDocument";
    case ErrorKind::empty_corpus: return "EmptyCorpus";
    case ErrorKind::empty_vocabulary: return "EmptyVocabulary";
    case ErrorKind::unknown_term: return "UnknownTerm";
    case ErrorKind::degenerate_labels: return "DegenerateLabels";
    case ErrorKind::non_finite_loss: return "NonFiniteLoss";
    case ErrorKind::length_mismatch: return "LengthMismatch";
    case ErrorKind::invalid_total: return "InvalidTotal";
    case ErrorKind::unknown_instance: return "UnknownInstance";
    case ErrorKind::duplicate_verdict: return "DuplicateVerdict";
    case ErrorKind::invalid_argument: return "InvalidArgument";
    case ErrorKind::io: return "IoError";
    case ErrorKind::missing_artifact: return "MissingArtifact";
    case ErrorKind::fingerprint_mismatch: return "FingerprintMismatch";
  }
  return "Error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

MalformedInput::MalformedInput(std::size_t line, const std::string& message)
    : Error(ErrorKind::malformed_input, "line " + std::to_string(line) + ": " + message), line_(line) {}

std::string to_hex(std::uint64_t value) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[value & 0xf];
    value >>= 4;
  }
  return out;
}

std::string Fingerprint::hex() const { return to_hex(state_); }

}  // namespace archminer
