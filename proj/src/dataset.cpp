#include "figqa/dataset.hpp"

#include <iomanip>
#include <sstream>

#include "figqa/digest.hpp"
#include "figqa/errors.hpp"

namespace figqa {
namespace {

std::string with_thousands(long long value) {
  std::string digits = std::to_string(value < 0 ? -value : value);
  std::string out;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (i > 0 && (digits.size() - i) % 3 == 0) out.push_back(',');
    out.push_back(digits[i]);
  }
  return value < 0 ? "-" + out : out;
}

std::string tenths_to_string(long long tenths) {
  return std::to_string(tenths / 10) + "." + std::to_string(tenths % 10);
}

Json optional_string(const std::optional<std::string>& value) { return value ? Json(*value) : Json(); }

}  // namespace

VerifiedRecord make_verified_record(const QACandidate& candidate, const FigureContext& context,
                                    const CascadeOutcome& outcome) {
  if (outcome.status != CascadeOutcome::Status::kRetained || !outcome.voting) {
    throw std::invalid_argument("only retained candidates become dataset records");
  }
  VerifiedRecord record;
  record.key = candidate.key();
  record.question = candidate.question;
  record.options = candidate.options;
  record.correct_index = candidate.correct_index;
  record.image_ref = context.image_ref;
  record.caption = candidate.caption;
  record.reasoning = outcome.voting->reasoning;
  record.arxiv_id = candidate.arxiv_id;
  record.figure_index = candidate.figure_index;
  record.primary_category = context.primary_category;
  record.provenance.claim = candidate.claim_text;
  record.provenance.context_digest = sha256_hex(context.context);
  for (const FilterVerdict& verdict : outcome.verdicts) {
    record.provenance.verdict_keys.push_back(verdict.candidate_key + "|" + std::string(to_string(verdict.filter)));
  }
  return record;
}

Json to_json(const VerifiedRecord& record) {
  Json out;
  out["key"] = record.key;
  out["question"] = record.question;
  out["options"] = record.options;
  out["correct_index"] = record.correct_index;
  out["answer"] = std::string(1, record.correct_letter());
  out["image"] = record.image_ref;
  out["caption"] = record.caption;
  out["reasoning"] = record.reasoning;
  out["arxiv_id"] = record.arxiv_id;
  out["figure_index"] = record.figure_index;
  out["primary_category"] = record.primary_category;
  out["figure_type"] = optional_string(record.figure_type);
  out["question_type"] = optional_string(record.question_type);
  out["annotators"] = record.annotators;
  Json provenance;
  provenance["claim"] = record.provenance.claim;
  provenance["context_digest"] = record.provenance.context_digest;
  provenance["verdicts"] = record.provenance.verdict_keys;
  out["provenance"] = provenance;
  return out;
}

VerifiedRecord record_from_json(const Json& json, std::size_t line) {
  VerifiedRecord record;
  record.key = require_field<std::string>(json, "key", line);
  record.question = require_field<std::string>(json, "question", line);
  const auto options = require_field<std::vector<std::string>>(json, "options", line);
  if (options.size() != kOptionCount) throw SchemaViolation(line, "options", "expected 4 options");
  std::copy(options.begin(), options.end(), record.options.begin());
  record.correct_index = require_field<int>(json, "correct_index", line);
  if (record.correct_index < 0 || record.correct_index >= kOptionCount) {
    throw SchemaViolation(line, "correct_index", "out of range");
  }
  if (json.contains("answer") && require_field<std::string>(json, "answer", line) != std::string(1, record.correct_letter())) {
    throw SchemaViolation(line, "answer", "disagrees with correct_index");
  }
  record.image_ref = require_field<std::string>(json, "image", line);
  record.caption = require_field<std::string>(json, "caption", line);
  record.reasoning = require_field<std::string>(json, "reasoning", line);
  if (record.reasoning.empty()) throw SchemaViolation(line, "reasoning", "empty");
  record.arxiv_id = require_field<std::string>(json, "arxiv_id", line);
  record.figure_index = require_field<int>(json, "figure_index", line);
  record.primary_category = require_field<std::string>(json, "primary_category", line);
  auto read_label = [&](const char* field, TaxonomyKind kind) -> std::optional<std::string> {
    if (!json.contains(field) || json.at(field).is_null()) return std::nullopt;
    auto value = require_field<std::string>(json, field, line);
    const auto& vocab = taxonomy_vocabulary(kind);
    if (std::find(vocab.begin(), vocab.end(), value) == vocab.end()) {
      throw SchemaViolation(line, field, "not in the closed vocabulary: " + value);
    }
    return value;
  };
  record.figure_type = read_label("figure_type", TaxonomyKind::kFigureType);
  record.question_type = read_label("question_type", TaxonomyKind::kQuestionType);
  if (json.contains("annotators")) {
    record.annotators = require_field<std::map<std::string, std::string>>(json, "annotators", line);
  }
  const Json provenance = require_field<Json>(json, "provenance", line);
  record.provenance.claim = require_field<std::string>(provenance, "claim", line);
  record.provenance.context_digest = require_field<std::string>(provenance, "context_digest", line);
  record.provenance.verdict_keys = require_field<std::vector<std::string>>(provenance, "verdicts", line);
  return record;
}

void write_dataset(const std::vector<VerifiedRecord>& records, const std::filesystem::path& path) {
  std::vector<Json> lines;
  lines.reserve(records.size());
  for (const VerifiedRecord& record : records) lines.push_back(to_json(record));
  write_jsonl_atomic(path, lines);
}

std::vector<VerifiedRecord> read_dataset(const std::filesystem::path& path) {
  std::vector<VerifiedRecord> records;
  read_jsonl(path, [&](const Json& json, std::size_t line) { records.push_back(record_from_json(json, line)); });
  return records;
}

std::string record_digest(const VerifiedRecord& record) { return sha256_hex(to_json(record).dump()); }

long long retention_tenths(long long count, long long claims) {
  if (claims <= 0) throw InvalidFunnel("claims must be positive");
  const long long hundredths = (20000 * count + claims) / (2 * claims);
  return (hundredths + 5) / 10;
}

double FunnelStats::retention(const std::string& stage) const {
  const auto it = retention_tenths.find(stage);
  if (it == retention_tenths.end()) throw std::out_of_range("no funnel stage " + stage);
  return static_cast<double>(it->second) / 10.0;
}

FunnelStats compute_funnel(const FunnelCounts& counts) {
  const std::array<long long, 4> stages = {counts.claims, counts.qa_generated, counts.after_text_filtering,
                                           counts.after_vision_filtering};
  if (counts.papers < 0) throw InvalidFunnel("paper count is negative");
  if (counts.claims <= 0) throw InvalidFunnel("claims must be positive");
  for (std::size_t i = 0; i < stages.size(); ++i) {
    if (stages[i] < 0) throw InvalidFunnel(std::string(kFunnelStages[i]) + " is negative");
    if (i > 0 && stages[i] > stages[i - 1]) {
      throw InvalidFunnel(std::string(kFunnelStages[i]) + " exceeds " + kFunnelStages[i - 1]);
    }
  }
  FunnelStats stats;
  stats.counts = counts;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    stats.retention_tenths[kFunnelStages[i]] = retention_tenths(stages[i], counts.claims);
  }
  return stats;
}

std::string format_funnel_table(const FunnelStats& stats) {
  struct Row {
    const char* step;
    long long count;
    const char* stage;
  };
  const std::array<Row, 5> rows = {{
      {"Papers", stats.counts.papers, nullptr},
      {"Atomic claims extracted", stats.counts.claims, "claims"},
      {"QA pairs generated", stats.counts.qa_generated, "qa_generated"},
      {"After text-based filtering", stats.counts.after_text_filtering, "after_text_filtering"},
      {"After vision-based filtering", stats.counts.after_vision_filtering, "after_vision_filtering"},
  }};
  std::ostringstream out;
  out << std::left << std::setw(30) << "Step" << std::right << std::setw(12) << "Count" << std::setw(12)
      << "Retention" << '\n';
  out << std::string(54, '-') << '\n';
  for (const Row& row : rows) {
    const std::string retention =
        row.stage ? tenths_to_string(stats.retention_tenths.at(row.stage)) + "%" : std::string("---");
    out << std::left << std::setw(30) << row.step << std::right << std::setw(12) << with_thousands(row.count)
        << std::setw(12) << retention << '\n';
  }
  return out.str();
}

Json to_json(const FunnelStats& stats) {
  Json out;
  out["papers"] = stats.counts.papers;
  out["claims"] = stats.counts.claims;
  out["qa_generated"] = stats.counts.qa_generated;
  out["after_text_filtering"] = stats.counts.after_text_filtering;
  out["after_vision_filtering"] = stats.counts.after_vision_filtering;
  Json retention;
  for (const char* stage : kFunnelStages) retention[stage] = stats.retention(stage);
  out["retention_percent"] = retention;
  return out;
}

}  // namespace figqa
