#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "figqa/figure_context.hpp"
#include "figqa/gateway.hpp"
#include "figqa/generation.hpp"
#include "figqa/jsonl.hpp"
#include "figqa/response_parsing.hpp"
#include "figqa/templates.hpp"

namespace figqa {

inline constexpr int kVoteCount = 3;

enum class FilterKind { kSourceConsistency, kVisualDependenceText, kVisualDependenceVision, kVisionConsistency };

inline constexpr std::array<FilterKind, 4> kCascadeOrder = {
    FilterKind::kSourceConsistency, FilterKind::kVisualDependenceText, FilterKind::kVisualDependenceVision,
    FilterKind::kVisionConsistency};

std::string_view to_string(FilterKind kind);
FilterKind filter_kind_from_string(std::string_view name);

struct VotingRecord {
  std::array<OptionSelection, kVoteCount> selections;
  std::array<std::string, kVoteCount> responses;
  std::optional<char> majority;  // nullopt is a tie
  std::optional<int> agreeing_run_index;
  std::string reasoning;  // verbatim response of the first run agreeing with the majority
};

struct FilterVerdict {
  std::string candidate_key;
  FilterKind filter = FilterKind::kSourceConsistency;
  bool passed = false;
  OptionSelection selection;
  std::vector<std::string> transcript_digests;
  std::string response;
  std::optional<VotingRecord> voting;  // only for kVisionConsistency
};

/// Letter chosen at least twice among three selections (all three when
/// `unanimous`), otherwise a tie. None and Ambiguous never form a majority.
std::optional<char> majority_vote(const std::array<OptionSelection, kVoteCount>& selections, bool unanimous = false);

/// Builds a voting record from three raw responses.
VotingRecord tally_votes(const std::array<std::string, kVoteCount>& responses, int option_count, bool unanimous = false);

/// Text model, given the citing paragraphs, must pick exactly the designated answer.
FilterVerdict check_source_consistency(const QACandidate& candidate, const std::string& context,
                                       ModelGateway& text_model, const TemplateLibrary& templates);

/// Stage one: text model with caption only. Passes when it misses the answer.
FilterVerdict check_visual_dependence_text(const QACandidate& candidate, ModelGateway& text_model,
                                           const TemplateLibrary& templates);

/// Stage two: vision model, still without the figure. Passes when it misses too.
FilterVerdict check_visual_dependence_vision(const QACandidate& candidate, ModelGateway& vision_model,
                                             const TemplateLibrary& templates);

/// Both stages; the second runs only when the first passes.
std::vector<FilterVerdict> check_visual_dependence(const QACandidate& candidate, ModelGateway& text_model,
                                                   ModelGateway& vision_model, const TemplateLibrary& templates);

/// Three samples from the vision model with the figure; passes when the
/// majority letter is the designated answer. A transport failure on any sample
/// throws before anything is recorded, so the triple is re-issued as a unit.
FilterVerdict check_vision_consistency(const QACandidate& candidate, const std::string& image_ref,
                                       ModelGateway& vision_model, const TemplateLibrary& templates,
                                       bool unanimous = false);

/// Append-only (candidate, filter) verdict store, optionally file-backed.
/// Reopening a file replays earlier verdicts so finished filters are skipped.
class VerdictLog {
 public:
  VerdictLog() = default;
  explicit VerdictLog(const std::filesystem::path& path);

  std::optional<FilterVerdict> find(const std::string& candidate_key, FilterKind filter) const;

  /// Returns false (and writes nothing) when a verdict already exists.
  bool record(const FilterVerdict& verdict);

  std::size_t size() const;
  std::size_t replayed() const { return replayed_; }

 private:
  mutable std::mutex mutex_;
  std::map<std::pair<std::string, FilterKind>, FilterVerdict> verdicts_;
  std::unique_ptr<JsonlAppender> appender_;
  std::size_t replayed_ = 0;
};

Json to_json(const FilterVerdict& verdict);
FilterVerdict verdict_from_json(const Json& record, std::size_t line);

struct CascadeModels {
  ModelGateway* text = nullptr;
  ModelGateway* vision = nullptr;
  const TemplateLibrary* templates = nullptr;
  bool unanimous_vote = false;
};

struct CascadeOutcome {
  enum class Status { kRetained, kRejected, kDeferred };
  Status status = Status::kDeferred;
  std::optional<FilterKind> rejected_at;
  std::optional<VotingRecord> voting;
  std::vector<FilterVerdict> verdicts;  // in cascade order, replayed or fresh
  std::string deferred_reason;
};

/// Applies the filters in fixed order with short-circuit rejection. Retained
/// iff every filter passes. Verdicts already in `log` are reused without model
/// calls; fresh verdicts are appended as soon as they are known.
CascadeOutcome run_cascade(const QACandidate& candidate, const FigureContext& context, const CascadeModels& models,
                           VerdictLog& log);

}  // namespace figqa
