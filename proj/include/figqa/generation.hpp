#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "figqa/figure_context.hpp"
#include "figqa/gateway.hpp"
#include "figqa/jsonl.hpp"
#include "figqa/templates.hpp"

namespace figqa {

inline constexpr int kOptionCount = 4;
inline constexpr std::string_view kClaimPrefix = "the figure shows";

std::string figure_key(std::string_view arxiv_id, int figure_index);
std::string candidate_key(std::string_view arxiv_id, int figure_index, int ordinal);

struct AtomicClaim {
  std::string arxiv_id;
  int figure_index = 0;
  int ordinal = 0;
  std::string text;

  std::string key() const { return candidate_key(arxiv_id, figure_index, ordinal); }
};

struct QACandidate {
  std::string arxiv_id;
  int figure_index = 0;
  int claim_ordinal = 0;
  std::string question;
  std::array<std::string, kOptionCount> options;
  int correct_index = 0;
  // options[i] is the model's option number permutation[i].
  std::array<int, kOptionCount> permutation{0, 1, 2, 3};
  std::string caption;
  std::string claim_text;

  std::string key() const { return candidate_key(arxiv_id, figure_index, claim_ordinal); }
  char correct_letter() const { return static_cast<char>('A' + correct_index); }
};

/// Checks option count, distinctness and non-empty fields. Returns a reason
/// string on violation.
std::optional<std::string> validate_candidate(const QACandidate& candidate);

/// "A. first\nB. second\n..." as presented to every model.
std::string format_options(const std::array<std::string, kOptionCount>& options);

struct ClaimExtraction {
  enum class Status { kOk, kNone, kMalformed };
  Status status = Status::kOk;
  std::vector<AtomicClaim> claims;
  int rejected_prefix = 0;
  std::vector<ModelTranscript> transcripts;
};

/// Claims about one figure drawn from its citing paragraphs. A malformed reply
/// is retried once as a fresh sample, then the figure yields no claims.
ClaimExtraction extract_claims(const FigureContext& context, ModelGateway& text_model,
                               const TemplateLibrary& templates);

struct Declined {
  std::string reason;  // "None" or "MalformedQA: ..."
};

struct QAGeneration {
  std::variant<QACandidate, Declined> outcome;
  std::vector<ModelTranscript> transcripts;
};

/// One multiple-choice candidate per claim. The option order is shuffled with
/// a per-claim seed derived from `run_seed` and the claim key.
QAGeneration generate_qa(const AtomicClaim& claim, const std::string& caption, const std::string& context,
                         ModelGateway& text_model, const TemplateLibrary& templates, std::uint64_t run_seed);

/// Parses the QA-generation reply without shuffling. Throws MalformedResponse
/// when tags are missing; returns Declined for "None".
std::variant<QACandidate, Declined> parse_qa_response(std::string_view response);

/// Seeded uniform permutation of 0..3 (Fisher-Yates).
std::array<int, kOptionCount> option_permutation(std::uint64_t run_seed, std::string_view key);

Json to_json(const AtomicClaim& claim);
AtomicClaim claim_from_json(const Json& record, std::size_t line);
Json to_json(const QACandidate& candidate);
QACandidate candidate_from_json(const Json& record, std::size_t line);
Json to_json(const FigureContext& context);
FigureContext context_from_json(const Json& record, std::size_t line);

}  // namespace figqa
