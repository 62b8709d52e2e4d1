#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "archminer/classifiers.hpp"
#include "archminer/corpus.hpp"

namespace archminer {

struct ConfusionMatrix {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const { return tp + fp + fn + tn; }
  nlohmann::ordered_json to_json() const;
  bool operator==(const ConfusionMatrix&) const = default;
};

struct Metrics {
  double precision = 0;
  double recall = 0;
  double f_measure = 0;
  // Degenerate denominators that were resolved to 0, e.g. "precision: no positive predictions".
  std::vector<std::string> notes;

  nlohmann::ordered_json to_json() const;
};

ConfusionMatrix confusion(const std::vector<bool>& predictions, const std::vector<bool>& truth);
Metrics metrics(const ConfusionMatrix& cm);
// F from given precision and recall, 0 when both are 0.
double f_measure(double precision, double recall);

enum class Verdict { confirmed_qa_at, rejected };
std::string_view to_string(Verdict v) noexcept;
std::optional<Verdict> parse_verdict(std::string_view name) noexcept;

struct VerdictRecord {
  PostId post_id = 0;
  Verdict verdict = Verdict::rejected;
  std::string annotator;
  std::string timestamp;  // ISO 8601, UTC

  nlohmann::ordered_json to_json() const;
  static VerdictRecord from_json(const nlohmann::json& j);
  bool operator==(const VerdictRecord&) const = default;
};

enum class ConflictPolicy {
  conservative,  // confirmed only when nobody rejected
  majority,      // confirmed when confirmations outnumber rejections
};

// Append-only log of human verdicts; one verdict per (post, annotator).
class VerdictLog {
 public:
  void add(VerdictRecord record);
  bool has_verdict(PostId post_id, std::string_view annotator) const;
  const std::vector<VerdictRecord>& records() const { return records_; }
  std::set<PostId> reviewed_posts() const;
  std::set<PostId> confirmed_posts(ConflictPolicy policy = ConflictPolicy::conservative) const;

  // JSONL; a malformed line or a duplicate verdict fails the whole load.
  static VerdictLog load(std::istream& in);
  void write(std::ostream& out) const;
  static void append(std::ostream& out, const VerdictRecord& record);

 private:
  std::vector<VerdictRecord> records_;
  std::set<std::pair<PostId, std::string>> keys_;
};

// 100 * confirmed / total_mined. Throws InvalidTotal when total_mined is 0
// or smaller than confirmed.
double performance(std::uint64_t confirmed, std::uint64_t total_mined);
double performance(const VerdictLog& verdicts, std::uint64_t total_mined,
                   ConflictPolicy policy = ConflictPolicy::conservative);

double cohen_kappa(const std::vector<std::string>& labels_a, const std::vector<std::string>& labels_b);
double cohen_kappa(const std::vector<bool>& labels_a, const std::vector<bool>& labels_b);

// Fixed-point rendering used by every report: three decimals for metrics,
// one for percentages.
std::string format_metric(double value);
std::string format_percent(double value);

// Warning text when the majority class exceeds 60% of the training set.
std::optional<std::string> imbalance_warning(std::uint64_t positives, std::uint64_t negatives);

struct EvaluationEntry {
  Algorithm algorithm = Algorithm::svm;
  ConfusionMatrix confusion;
  Metrics metrics;
};

struct EvaluationReport {
  std::vector<EvaluationEntry> entries;
  std::uint64_t train_positives = 0;
  std::uint64_t train_negatives = 0;
  std::optional<std::string> warning;

  nlohmann::ordered_json to_json() const;
  std::string to_table() const;
};

struct AblationRow {
  Algorithm algorithm = Algorithm::svm;
  Metrics with_dictionary;
  Metrics without_dictionary;
  double delta_f = 0;
  // Percent change of F relative to the without-dictionary arm; empty when that F is 0.
  std::optional<double> relative_improvement;
  bool regressed = false;
};

struct AblationReport {
  std::vector<AblationRow> rows;

  bool any_regression() const;
  nlohmann::ordered_json to_json() const;
  std::string to_table() const;
};

// Both arms must cover the same algorithms.
AblationReport ablation_report(const std::map<Algorithm, Metrics>& with_dictionary,
                               const std::map<Algorithm, Metrics>& without_dictionary);

}  // namespace archminer
