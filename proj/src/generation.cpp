#include "figqa/generation.hpp"

#include <set>

#include "figqa/digest.hpp"
#include "figqa/errors.hpp"
#include "figqa/response_parsing.hpp"
#include "figqa/text_util.hpp"

namespace figqa {

std::string figure_key(std::string_view arxiv_id, int figure_index) {
  return std::string(arxiv_id) + "#" + std::to_string(figure_index);
}

std::string candidate_key(std::string_view arxiv_id, int figure_index, int ordinal) {
  return figure_key(arxiv_id, figure_index) + "#" + std::to_string(ordinal);
}

std::optional<std::string> validate_candidate(const QACandidate& candidate) {
  if (trim_view(candidate.question).empty()) return "empty question";
  if (trim_view(candidate.caption).empty()) return "empty caption";
  if (candidate.correct_index < 0 || candidate.correct_index >= kOptionCount) return "correct index out of range";
  std::set<std::string> seen;
  for (const std::string& option : candidate.options) {
    const std::string normalized = collapse_whitespace(option);
    if (normalized.empty()) return "empty option";
    if (!seen.insert(normalized).second) return "duplicate option: " + normalized;
  }
  return std::nullopt;
}

std::string format_options(const std::array<std::string, kOptionCount>& options) {
  std::string out;
  for (int i = 0; i < kOptionCount; ++i) {
    if (i > 0) out += '\n';
    out += static_cast<char>('A' + i);
    out += ". ";
    out += options[static_cast<std::size_t>(i)];
  }
  return out;
}

ClaimExtraction extract_claims(const FigureContext& context, ModelGateway& text_model,
                               const TemplateLibrary& templates) {
  const std::string prompt =
      templates.render(TemplateName::kClaimExtract, {{"context", context.context}, {"label", context.label}});
  ClaimExtraction result;
  std::variant<std::vector<std::string>, NoneSignal> parsed = NoneSignal{};
  bool parsed_ok = false;
  for (int sample = 0; sample < 2 && !parsed_ok; ++sample) {
    Completion reply = text_model.complete_text(prompt, sample);
    result.transcripts.push_back(reply.transcript);
    try {
      parsed = parse_patterns_block(reply.text);
      parsed_ok = true;
    } catch (const MalformedResponse&) {
    }
  }
  if (!parsed_ok) {
    result.status = ClaimExtraction::Status::kMalformed;
    return result;
  }
  if (std::holds_alternative<NoneSignal>(parsed)) {
    result.status = ClaimExtraction::Status::kNone;
    return result;
  }
  int ordinal = 0;
  for (const std::string& line : std::get<std::vector<std::string>>(parsed)) {
    std::string text = collapse_whitespace(line);
    if (!starts_with_icase(text, kClaimPrefix)) {
      ++result.rejected_prefix;
      continue;
    }
    result.claims.push_back({context.arxiv_id, context.figure_index, ordinal++, std::move(text)});
  }
  return result;
}

std::variant<QACandidate, Declined> parse_qa_response(std::string_view response) {
  const auto question = extract_tag(response, "question");
  if (!question) {
    if (is_none_reply(response)) return Declined{"None"};
    throw MalformedResponse("QA reply has no <question> tag");
  }
  QACandidate candidate;
  candidate.question = trim(*question);
  for (int i = 0; i < kOptionCount; ++i) {
    const auto option = extract_tag(response, std::string(1, static_cast<char>('A' + i)));
    if (!option) throw MalformedResponse("QA reply lacks option " + std::string(1, static_cast<char>('A' + i)));
    candidate.options[static_cast<std::size_t>(i)] = trim(*option);
  }
  const auto answer = extract_tag(response, "answer");
  if (!answer) throw MalformedResponse("QA reply has no <answer> tag");
  const std::string letter = trim(*answer);
  if (letter.size() != 1 || std::toupper(static_cast<unsigned char>(letter[0])) < 'A' ||
      std::toupper(static_cast<unsigned char>(letter[0])) >= 'A' + kOptionCount) {
    return Declined{"MalformedQA: answer is not one of A-D"};
  }
  candidate.correct_index = std::toupper(static_cast<unsigned char>(letter[0])) - 'A';
  return candidate;
}

std::array<int, kOptionCount> option_permutation(std::uint64_t run_seed, std::string_view key) {
  std::array<int, kOptionCount> perm{0, 1, 2, 3};
  SeededRng rng(derive_seed(run_seed, key));
  for (int i = kOptionCount - 1; i > 0; --i) {
    const auto j = static_cast<int>(rng.uniform(static_cast<std::uint64_t>(i + 1)));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }
  return perm;
}

QAGeneration generate_qa(const AtomicClaim& claim, const std::string& caption, const std::string& context,
                         ModelGateway& text_model, const TemplateLibrary& templates, std::uint64_t run_seed) {
  const std::string prompt = templates.render(TemplateName::kQaGenerate,
                                              {{"claim", claim.text}, {"caption", caption}, {"context", context}});
  QAGeneration result;
  std::optional<std::variant<QACandidate, Declined>> parsed;
  for (int sample = 0; sample < 2 && !parsed; ++sample) {
    Completion reply = text_model.complete_text(prompt, sample);
    result.transcripts.push_back(reply.transcript);
    try {
      parsed = parse_qa_response(reply.text);
    } catch (const MalformedResponse&) {
    }
  }
  if (!parsed) {
    result.outcome = Declined{"MalformedQA: unparseable reply"};
    return result;
  }
  if (auto* declined = std::get_if<Declined>(&*parsed)) {
    result.outcome = std::move(*declined);
    return result;
  }
  QACandidate raw = std::get<QACandidate>(std::move(*parsed));
  raw.arxiv_id = claim.arxiv_id;
  raw.figure_index = claim.figure_index;
  raw.claim_ordinal = claim.ordinal;
  raw.caption = caption;
  raw.claim_text = claim.text;
  if (auto problem = validate_candidate(raw)) {
    result.outcome = Declined{"MalformedQA: " + *problem};
    return result;
  }
  QACandidate shuffled = raw;
  shuffled.permutation = option_permutation(run_seed, raw.key());
  for (int i = 0; i < kOptionCount; ++i) {
    const int source = shuffled.permutation[static_cast<std::size_t>(i)];
    shuffled.options[static_cast<std::size_t>(i)] = raw.options[static_cast<std::size_t>(source)];
    if (source == raw.correct_index) shuffled.correct_index = i;
  }
  result.outcome = std::move(shuffled);
  return result;
}

Json to_json(const AtomicClaim& claim) {
  Json out;
  out["arxiv_id"] = claim.arxiv_id;
  out["figure_index"] = claim.figure_index;
  out["ordinal"] = claim.ordinal;
  out["text"] = claim.text;
  return out;
}

AtomicClaim claim_from_json(const Json& record, std::size_t line) {
  AtomicClaim claim;
  claim.arxiv_id = require_field<std::string>(record, "arxiv_id", line);
  claim.figure_index = require_field<int>(record, "figure_index", line);
  claim.ordinal = require_field<int>(record, "ordinal", line);
  claim.text = require_field<std::string>(record, "text", line);
  return claim;
}

Json to_json(const QACandidate& candidate) {
  Json out;
  out["key"] = candidate.key();
  out["arxiv_id"] = candidate.arxiv_id;
  out["figure_index"] = candidate.figure_index;
  out["claim_ordinal"] = candidate.claim_ordinal;
  out["question"] = candidate.question;
  out["options"] = candidate.options;
  out["correct_index"] = candidate.correct_index;
  out["permutation"] = candidate.permutation;
  out["caption"] = candidate.caption;
  out["claim"] = candidate.claim_text;
  return out;
}

QACandidate candidate_from_json(const Json& record, std::size_t line) {
  QACandidate candidate;
  candidate.arxiv_id = require_field<std::string>(record, "arxiv_id", line);
  candidate.figure_index = require_field<int>(record, "figure_index", line);
  candidate.claim_ordinal = require_field<int>(record, "claim_ordinal", line);
  candidate.question = require_field<std::string>(record, "question", line);
  const auto options = require_field<std::vector<std::string>>(record, "options", line);
  if (options.size() != kOptionCount) throw SchemaViolation(line, "options", "expected 4 options");
  std::copy(options.begin(), options.end(), candidate.options.begin());
  candidate.correct_index = require_field<int>(record, "correct_index", line);
  const auto perm = require_field<std::vector<int>>(record, "permutation", line);
  if (perm.size() != kOptionCount) throw SchemaViolation(line, "permutation", "expected 4 entries");
  std::copy(perm.begin(), perm.end(), candidate.permutation.begin());
  candidate.caption = require_field<std::string>(record, "caption", line);
  candidate.claim_text = require_field<std::string>(record, "claim", line);
  if (auto problem = validate_candidate(candidate)) throw SchemaViolation(line, "options", *problem);
  return candidate;
}

Json to_json(const FigureContext& context) {
  Json out;
  out["arxiv_id"] = context.arxiv_id;
  out["primary_category"] = context.primary_category;
  out["figure_index"] = context.figure_index;
  out["image"] = context.image_ref;
  out["caption"] = context.caption;
  out["latex_caption"] = context.latex_caption;
  out["label"] = context.label;
  out["citing_paragraph_count"] = context.citing_paragraph_count;
  out["context"] = context.context;
  return out;
}

FigureContext context_from_json(const Json& record, std::size_t line) {
  FigureContext context;
  context.arxiv_id = require_field<std::string>(record, "arxiv_id", line);
  context.primary_category = require_field<std::string>(record, "primary_category", line);
  context.figure_index = require_field<int>(record, "figure_index", line);
  context.image_ref = require_field<std::string>(record, "image", line);
  context.caption = require_field<std::string>(record, "caption", line);
  context.latex_caption = require_field<std::string>(record, "latex_caption", line);
  context.label = require_field<std::string>(record, "label", line);
  context.citing_paragraph_count = require_field<int>(record, "citing_paragraph_count", line);
  context.context = require_field<std::string>(record, "context", line);
  return context;
}

}  // namespace figqa
