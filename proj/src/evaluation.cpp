#include "archminer/evaluation.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "archminer/error.hpp"
#include "text_util.hpp"

namespace archminer {

nlohmann::ordered_json ConfusionMatrix::to_json() const {
  return {{"tp", tp}, {"fp", fp}, {"fn", fn}, {"tn", tn}};
}

nlohmann::ordered_json Metrics::to_json() const {
  nlohmann::ordered_json j{{"precision", precision}, {"recall", recall}, {"f_measure", f_measure}};
  if (!notes.empty()) j["notes"] = notes;
  return j;
}

ConfusionMatrix confusion(const std::vector<bool>& predictions, const std::vector<bool>& truth) {
  if (predictions.size() != truth.size())
    throw Error(ErrorKind::length_mismatch, "predictions and truth differ in length");
  if (predictions.empty()) throw Error(ErrorKind::length_mismatch, "nothing to evaluate");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (predictions[i]) {
      ++(truth[i] ? cm.tp : cm.fp);
    } else {
      ++(truth[i] ? cm.fn : cm.tn);
    }
  }
  return cm;
}

double f_measure(double precision, double recall) {
  return precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
}

Metrics metrics(const ConfusionMatrix& cm) {
  Metrics m;
  if (cm.tp + cm.fp > 0) {
    m.precision = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fp);
  } else {
    m.notes.push_back("precision: no positive predictions");
  }
  if (cm.tp + cm.fn > 0) {
    m.recall = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn);
  } else {
    m.notes.push_back("recall: no positive examples");
  }
  m.f_measure = f_measure(m.precision, m.recall);
  if (m.precision + m.recall == 0) m.notes.push_back("f_measure: precision and recall are both 0");
  return m;
}

std::string_view to_string(Verdict v) noexcept {
  return v == Verdict::confirmed_qa_at ? "confirmed_qa_at" : "rejected";
}

std::optional<Verdict> parse_verdict(std::string_view name) noexcept {
  if (name == "confirmed_qa_at") return Verdict::confirmed_qa_at;
  if (name == "rejected") return Verdict::rejected;
  return std::nullopt;
}

nlohmann::ordered_json VerdictRecord::to_json() const {
  return {{"post_id", post_id}, {"verdict", to_string(verdict)}, {"annotator", annotator}, {"timestamp", timestamp}};
}

VerdictRecord VerdictRecord::from_json(const nlohmann::json& j) {
  VerdictRecord r;
  r.post_id = j.at("post_id").get<PostId>();
  const auto v = parse_verdict(j.at("verdict").get<std::string>());
  if (!v) throw Error(ErrorKind::malformed_input, "unknown verdict '" + j.at("verdict").get<std::string>() + "'");
  r.verdict = *v;
  r.annotator = j.at("annotator").get<std::string>();
  r.timestamp = j.at("timestamp").get<std::string>();
  if (r.annotator.empty()) throw Error(ErrorKind::malformed_input, "verdict without an annotator");
  return r;
}

void VerdictLog::add(VerdictRecord record) {
  if (!keys_.emplace(record.post_id, record.annotator).second)
    throw Error(ErrorKind::duplicate_verdict,
                "post " + std::to_string(record.post_id) + " already has a verdict from " + record.annotator);
  records_.push_back(std::move(record));
}

bool VerdictLog::has_verdict(PostId post_id, std::string_view annotator) const {
  return keys_.count({post_id, std::string(annotator)}) > 0;
}

std::set<PostId> VerdictLog::reviewed_posts() const {
  std::set<PostId> out;
  for (const auto& r : records_) out.insert(r.post_id);
  return out;
}

std::set<PostId> VerdictLog::confirmed_posts(ConflictPolicy policy) const {
  std::map<PostId, std::pair<int, int>> tally;  // confirmations, rejections
  for (const auto& r : records_) {
    auto& t = tally[r.post_id];
    ++(r.verdict == Verdict::confirmed_qa_at ? t.first : t.second);
  }
  std::set<PostId> out;
  for (const auto& [id, t] : tally) {
    const bool confirmed = policy == ConflictPolicy::conservative ? t.second == 0 : t.first > t.second;
    if (confirmed) out.insert(id);
  }
  return out;
}

VerdictLog VerdictLog::load(std::istream& in) {
  VerdictLog log;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    try {
      log.add(VerdictRecord::from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw MalformedInput(line_no, e.what());
    }
  }
  return log;
}

void VerdictLog::write(std::ostream& out) const {
  for (const auto& r : records_) append(out, r);
}

void VerdictLog::append(std::ostream& out, const VerdictRecord& record) { out << record.to_json().dump() << '\n'; }

double performance(std::uint64_t confirmed, std::uint64_t total_mined) {
  if (total_mined == 0) throw Error(ErrorKind::invalid_total, "total mined posts must be positive");
  if (confirmed > total_mined)
    throw Error(ErrorKind::invalid_total, std::to_string(confirmed) + " confirmed exceeds " +
                                              std::to_string(total_mined) + " mined");
  return 100.0 * static_cast<double>(confirmed) / static_cast<double>(total_mined);
}

double performance(const VerdictLog& verdicts, std::uint64_t total_mined, ConflictPolicy policy) {
  return performance(verdicts.confirmed_posts(policy).size(), total_mined);
}

double cohen_kappa(const std::vector<std::string>& labels_a, const std::vector<std::string>& labels_b) {
  if (labels_a.size() != labels_b.size()) throw Error(ErrorKind::length_mismatch, "label lists differ in length");
  if (labels_a.size() < 2) throw Error(ErrorKind::length_mismatch, "kappa needs at least two items");
  const auto n = static_cast<double>(labels_a.size());
  std::map<std::string, double> freq_a, freq_b;
  double agree = 0;
  for (std::size_t i = 0; i < labels_a.size(); ++i) {
    agree += labels_a[i] == labels_b[i];
    freq_a[labels_a[i]] += 1;
    freq_b[labels_b[i]] += 1;
  }
  const double p_o = agree / n;
  double p_e = 0;
  for (const auto& [label, count] : freq_a)
    if (auto it = freq_b.find(label); it != freq_b.end()) p_e += (count / n) * (it->second / n);
  if (p_e >= 1) return 1.0;
  return (p_o - p_e) / (1 - p_e);
}

double cohen_kappa(const std::vector<bool>& labels_a, const std::vector<bool>& labels_b) {
  auto names = [](const std::vector<bool>& v) {
    std::vector<std::string> out;
    for (bool b : v) out.emplace_back(b ? "1" : "0");
    return out;
  };
  return cohen_kappa(names(labels_a), names(labels_b));
}

std::string format_metric(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", value);
  return buf;
}

std::string format_percent(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", value);
  return buf;
}

std::optional<std::string> imbalance_warning(std::uint64_t positives, std::uint64_t negatives) {
  const auto total = positives + negatives;
  if (total == 0) return std::nullopt;
  const double major = static_cast<double>(std::max(positives, negatives)) / static_cast<double>(total);
  if (major <= 0.6) return std::nullopt;
  return "training set is imbalanced: " + std::to_string(positives) + " positive / " + std::to_string(negatives) +
         " negative exceeds 60/40";
}

namespace {

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

}  // namespace

nlohmann::ordered_json EvaluationReport::to_json() const {
  nlohmann::ordered_json j;
  j["train"] = {{"positives", train_positives}, {"negatives", train_negatives}};
  if (warning) j["warning"] = *warning;
  j["results"] = nlohmann::ordered_json::array();
  for (const auto& e : entries)
    j["results"].push_back(
        {{"algorithm", to_string(e.algorithm)}, {"confusion", e.confusion.to_json()}, {"metrics", e.metrics.to_json()}});
  return j;
}

std::string EvaluationReport::to_table() const {
  std::ostringstream out;
  out << pad("algorithm", 10) << pad("precision", 11) << pad("recall", 8) << pad("f", 7) << "tp/fp/fn/tn\n";
  std::vector<std::string> footnotes;
  for (const auto& e : entries) {
    std::string name(to_string(e.algorithm));
    for (const auto& n : e.metrics.notes) {
      footnotes.push_back(name + ": " + n);
      name += "*";
    }
    out << pad(name, 10) << pad(format_metric(e.metrics.precision), 11) << pad(format_metric(e.metrics.recall), 8)
        << pad(format_metric(e.metrics.f_measure), 7) << e.confusion.tp << '/' << e.confusion.fp << '/'
        << e.confusion.fn << '/' << e.confusion.tn << '\n';
  }
  for (const auto& f : footnotes) out << "* " << f << '\n';
  if (warning) out << "warning: " << *warning << '\n';
  return out.str();
}

bool AblationReport::any_regression() const {
  for (const auto& r : rows)
    if (r.regressed) return true;
  return false;
}

nlohmann::ordered_json AblationReport::to_json() const {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json row{{"algorithm", to_string(r.algorithm)},
                               {"with_dictionary", r.with_dictionary.to_json()},
                               {"without_dictionary", r.without_dictionary.to_json()},
                               {"delta_f", r.delta_f}};
    row["relative_improvement"] = r.relative_improvement ? nlohmann::ordered_json(*r.relative_improvement) : nullptr;
    row["regressed"] = r.regressed;
    j.push_back(std::move(row));
  }
  return j;
}

std::string AblationReport::to_table() const {
  std::ostringstream out;
  out << pad("algorithm", 10) << pad("without", 9) << pad("with", 7) << pad("delta", 8) << "improvement\n";
  for (const auto& r : rows) {
    const auto delta = (r.delta_f >= 0 ? "+" : "") + format_metric(r.delta_f);
    std::string rel = "n/a";
    if (r.relative_improvement) rel = (*r.relative_improvement >= 0 ? "+" : "") + format_percent(*r.relative_improvement);
    out << pad(std::string(to_string(r.algorithm)), 10) << pad(format_metric(r.without_dictionary.f_measure), 9)
        << pad(format_metric(r.with_dictionary.f_measure), 7) << pad(delta, 8) << rel
        << (r.regressed ? "  REGRESSED" : "") << '\n';
  }
  return out.str();
}

AblationReport ablation_report(const std::map<Algorithm, Metrics>& with_dictionary,
                               const std::map<Algorithm, Metrics>& without_dictionary) {
  if (with_dictionary.size() != without_dictionary.size())
    throw Error(ErrorKind::invalid_argument, "ablation arms cover different algorithms");
  AblationReport report;
  for (const auto& [algorithm, with] : with_dictionary) {
    const auto it = without_dictionary.find(algorithm);
    if (it == without_dictionary.end())
      throw Error(ErrorKind::invalid_argument, "ablation arms cover different algorithms");
    AblationRow row;
    row.algorithm = algorithm;
    row.with_dictionary = with;
    row.without_dictionary = it->second;
    row.delta_f = with.f_measure - it->second.f_measure;
    if (it->second.f_measure > 0) row.relative_improvement = 100 * row.delta_f / it->second.f_measure;
    row.regressed = with.f_measure < it->second.f_measure;
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace archminer
