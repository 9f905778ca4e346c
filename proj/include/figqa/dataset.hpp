#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "figqa/generation.hpp"
#include "figqa/jsonl.hpp"
#include "figqa/verification.hpp"

namespace figqa {

struct Provenance {
  std::string claim;
  std::string context_digest;
  std::vector<std::string> verdict_keys;  // "<candidate>|<filter>"

  bool operator==(const Provenance&) const = default;
};

struct VerifiedRecord {
  std::string key;
  std::string question;
  std::array<std::string, kOptionCount> options;
  int correct_index = 0;
  std::string image_ref;
  std::string caption;
  std::string reasoning;
  std::string arxiv_id;
  int figure_index = 0;
  std::string primary_category;
  std::optional<std::string> figure_type;
  std::optional<std::string> question_type;
  std::map<std::string, std::string> annotators;  // label kind -> model name
  Provenance provenance;

  char correct_letter() const { return static_cast<char>('A' + correct_index); }
  bool operator==(const VerifiedRecord&) const = default;
};

/// Assembles the dataset row for a candidate that passed every filter.
VerifiedRecord make_verified_record(const QACandidate& candidate, const FigureContext& context,
                                    const CascadeOutcome& outcome);

Json to_json(const VerifiedRecord& record);
VerifiedRecord record_from_json(const Json& json, std::size_t line);

/// One record per line, stable field order. Replaces the file atomically.
void write_dataset(const std::vector<VerifiedRecord>& records, const std::filesystem::path& path);
/// Throws SchemaViolation with the offending line and field.
std::vector<VerifiedRecord> read_dataset(const std::filesystem::path& path);

/// Stable content hash of the canonical record, used to detect duplicates.
std::string record_digest(const VerifiedRecord& record);

// ---- funnel ----

struct FunnelCounts {
  long long papers = 0;
  long long claims = 0;
  long long qa_generated = 0;
  long long after_text_filtering = 0;
  long long after_vision_filtering = 0;
};

struct FunnelStats {
  FunnelCounts counts;
  // Retention relative to claims, in tenths of a percent (384 means 38.4%).
  std::map<std::string, long long> retention_tenths;

  double retention(const std::string& stage) const;
};

inline constexpr std::array<const char*, 4> kFunnelStages = {"claims", "qa_generated", "after_text_filtering",
                                                             "after_vision_filtering"};

/// 100 * count / claims as a one-decimal percentage, in tenths. The value is
/// rounded half-up to two decimals first and then to one, which is how the
/// reference funnel table was rounded (38.34995 -> 38.35 -> 38.4).
long long retention_tenths(long long count, long long claims);

/// Throws InvalidFunnel when claims is not positive or a stage exceeds its predecessor.
FunnelStats compute_funnel(const FunnelCounts& counts);

/// Table with Step / Count / Retention columns.
std::string format_funnel_table(const FunnelStats& stats);
Json to_json(const FunnelStats& stats);

// ---- taxonomy ----

enum class TaxonomyKind { kFigureType, kQuestionType };

inline const std::vector<std::string> kFigureTypes = {
    "Line Plot", "Composite", "Diagram",   "Scatter Plot", "Bar Chart", "Heatmap",
    "Graph",     "Box Plot",  "Other",     "Illustration", "Photo",     "Pie Chart"};
inline const std::vector<std::string> kQuestionTypes = {"Relational", "Comparative", "Descriptive", "Compositional",
                                                        "Structural"};

const std::vector<std::string>& taxonomy_vocabulary(TaxonomyKind kind);
std::string_view to_string(TaxonomyKind kind);

struct TaxonomyLabel {
  TaxonomyKind kind;
  std::optional<std::string> value;  // nullopt means unlabeled
  std::string annotator_model;
};

/// Canonical vocabulary entry named by a reply (a <label> tag or the bare
/// text, case-insensitive), or nullopt when out of vocabulary.
std::optional<std::string> parse_taxonomy_reply(std::string_view reply, TaxonomyKind kind);

/// Figure types go to a vision model with the image; question types to a text
/// model. An out-of-vocabulary reply is retried once, then left unlabeled.
TaxonomyLabel annotate_taxonomy(const VerifiedRecord& record, TaxonomyKind kind, ModelGateway& model,
                                const TemplateLibrary& templates);

// ---- stratified sampling ----

enum class StratumField { kQuestionType, kDomain, kFigureType };

using StratumKey = std::vector<std::string>;

/// Stratum of a record, or nullopt when any requested field is unlabeled.
std::optional<StratumKey> stratum_of(const VerifiedRecord& record, const std::vector<StratumField>& fields);

/// Largest-remainder proportional allocation of n seats. Remainder ties go to
/// the larger stratum, then to the lexicographically smaller key.
std::map<StratumKey, std::size_t> proportional_allocation(const std::map<StratumKey, std::size_t>& populations,
                                                          std::size_t n, std::vector<std::string>* notes = nullptr);

struct SampleResult {
  std::vector<VerifiedRecord> records;  // input order preserved
  std::map<StratumKey, std::size_t> allocation;
  std::size_t excluded_unlabeled = 0;
  std::vector<std::string> notes;
};

/// Exactly n records. Throws InsufficientStratum when fewer than n labeled
/// records are available.
SampleResult stratified_sample(const std::vector<VerifiedRecord>& records, std::size_t n,
                               const std::vector<StratumField>& fields, std::uint64_t seed);

}  // namespace figqa
