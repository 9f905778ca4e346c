#include "figqa/verification.hpp"

#include <stdexcept>

#include "figqa/errors.hpp"

namespace figqa {
namespace {

TemplateVars question_vars(const QACandidate& candidate) {
  return {{"question", candidate.question}, {"options", format_options(candidate.options)}};
}

FilterVerdict single_call_verdict(const QACandidate& candidate, FilterKind kind, const Completion& reply,
                                  OptionSelection selection, bool passed) {
  FilterVerdict verdict;
  verdict.candidate_key = candidate.key();
  verdict.filter = kind;
  verdict.passed = passed;
  verdict.selection = selection;
  verdict.transcript_digests = {reply.transcript.request_digest};
  verdict.response = reply.text;
  return verdict;
}

bool identifies_answer(const OptionSelection& selection, const QACandidate& candidate) {
  return selection.is_letter() && selection.letter == candidate.correct_letter();
}

}  // namespace

std::string_view to_string(FilterKind kind) {
  switch (kind) {
    case FilterKind::kSourceConsistency: return "SourceConsistency";
    case FilterKind::kVisualDependenceText: return "VisualDependenceText";
    case FilterKind::kVisualDependenceVision: return "VisualDependenceVision";
    case FilterKind::kVisionConsistency: return "VisionConsistency";
  }
  return "Unknown";
}

FilterKind filter_kind_from_string(std::string_view name) {
  for (FilterKind kind : kCascadeOrder) {
    if (to_string(kind) == name) return kind;
  }
  throw std::invalid_argument("unknown filter: " + std::string(name));
}

std::optional<char> majority_vote(const std::array<OptionSelection, kVoteCount>& selections, bool unanimous) {
  const int needed = unanimous ? kVoteCount : 2;
  for (const OptionSelection& candidate : selections) {
    if (!candidate.is_letter()) continue;
    int count = 0;
    for (const OptionSelection& other : selections) {
      if (other.is_letter() && other.letter == candidate.letter) ++count;
    }
    if (count >= needed) return candidate.letter;
  }
  return std::nullopt;
}

VotingRecord tally_votes(const std::array<std::string, kVoteCount>& responses, int option_count, bool unanimous) {
  VotingRecord record;
  record.responses = responses;
  for (int i = 0; i < kVoteCount; ++i) {
    auto selection = parse_option_tag_or_ambiguous(responses[static_cast<std::size_t>(i)], option_count);
    // Inside the vote an unusable reply is an abstention.
    if (selection.kind == OptionSelection::Kind::kAmbiguous) selection = OptionSelection::none();
    record.selections[static_cast<std::size_t>(i)] = selection;
  }
  record.majority = majority_vote(record.selections, unanimous);
  if (record.majority) {
    for (int i = 0; i < kVoteCount; ++i) {
      const OptionSelection& s = record.selections[static_cast<std::size_t>(i)];
      if (s.is_letter() && s.letter == *record.majority) {
        record.agreeing_run_index = i;
        record.reasoning = responses[static_cast<std::size_t>(i)];
        break;
      }
    }
  }
  return record;
}

FilterVerdict check_source_consistency(const QACandidate& candidate, const std::string& context,
                                       ModelGateway& text_model, const TemplateLibrary& templates) {
  TemplateVars vars = question_vars(candidate);
  vars["context"] = context;
  const Completion reply = text_model.complete_text(templates.render(TemplateName::kSourceCheck, vars));
  const OptionSelection selection = parse_option_tag_or_ambiguous(reply.text, kOptionCount);
  return single_call_verdict(candidate, FilterKind::kSourceConsistency, reply, selection,
                             identifies_answer(selection, candidate));
}

FilterVerdict check_visual_dependence_text(const QACandidate& candidate, ModelGateway& text_model,
                                           const TemplateLibrary& templates) {
  TemplateVars vars = question_vars(candidate);
  vars["caption"] = candidate.caption;
  const Completion reply = text_model.complete_text(templates.render(TemplateName::kVisdepCheck, vars));
  const OptionSelection selection = parse_option_tag_or_ambiguous(reply.text, kOptionCount);
  return single_call_verdict(candidate, FilterKind::kVisualDependenceText, reply, selection,
                             !identifies_answer(selection, candidate));
}

FilterVerdict check_visual_dependence_vision(const QACandidate& candidate, ModelGateway& vision_model,
                                             const TemplateLibrary& templates) {
  TemplateVars vars = question_vars(candidate);
  vars["caption"] = candidate.caption;
  const Completion reply = vision_model.complete_text(templates.render(TemplateName::kVisdepCheck, vars));
  const OptionSelection selection = parse_option_tag_or_ambiguous(reply.text, kOptionCount);
  return single_call_verdict(candidate, FilterKind::kVisualDependenceVision, reply, selection,
                             !identifies_answer(selection, candidate));
}

std::vector<FilterVerdict> check_visual_dependence(const QACandidate& candidate, ModelGateway& text_model,
                                                   ModelGateway& vision_model, const TemplateLibrary& templates) {
  std::vector<FilterVerdict> verdicts;
  verdicts.push_back(check_visual_dependence_text(candidate, text_model, templates));
  if (verdicts.back().passed) verdicts.push_back(check_visual_dependence_vision(candidate, vision_model, templates));
  return verdicts;
}

FilterVerdict check_vision_consistency(const QACandidate& candidate, const std::string& image_ref,
                                       ModelGateway& vision_model, const TemplateLibrary& templates, bool unanimous) {
  TemplateVars vars = question_vars(candidate);
  vars["caption"] = candidate.caption;
  const std::string prompt = templates.render(TemplateName::kVisionAnswer, vars);
  std::array<std::string, kVoteCount> responses;
  std::vector<std::string> digests;
  for (int i = 0; i < kVoteCount; ++i) {
    const Completion reply = vision_model.complete_vision(prompt, image_ref, i);
    responses[static_cast<std::size_t>(i)] = reply.text;
    digests.push_back(reply.transcript.request_digest);
  }
  VotingRecord voting = tally_votes(responses, kOptionCount, unanimous);
  FilterVerdict verdict;
  verdict.candidate_key = candidate.key();
  verdict.filter = FilterKind::kVisionConsistency;
  verdict.passed = voting.majority.has_value() && *voting.majority == candidate.correct_letter();
  verdict.selection = voting.majority ? OptionSelection::of(*voting.majority) : OptionSelection::ambiguous();
  verdict.transcript_digests = std::move(digests);
  verdict.response = voting.reasoning;
  verdict.voting = std::move(voting);
  return verdict;
}

CascadeOutcome run_cascade(const QACandidate& candidate, const FigureContext& context, const CascadeModels& models,
                           VerdictLog& log) {
  if (models.text == nullptr || models.vision == nullptr || models.templates == nullptr) {
    throw std::invalid_argument("cascade needs text and vision models and templates");
  }
  if (figure_key(candidate.arxiv_id, candidate.figure_index) != figure_key(context.arxiv_id, context.figure_index)) {
    throw std::invalid_argument("candidate " + candidate.key() + " paired with the wrong figure context");
  }
  CascadeOutcome outcome;
  const std::string key = candidate.key();
  for (FilterKind kind : kCascadeOrder) {
    std::optional<FilterVerdict> verdict = log.find(key, kind);
    if (!verdict) {
      try {
        switch (kind) {
          case FilterKind::kSourceConsistency:
            verdict = check_source_consistency(candidate, context.context, *models.text, *models.templates);
            break;
          case FilterKind::kVisualDependenceText:
            verdict = check_visual_dependence_text(candidate, *models.text, *models.templates);
            break;
          case FilterKind::kVisualDependenceVision:
            verdict = check_visual_dependence_vision(candidate, *models.vision, *models.templates);
            break;
          case FilterKind::kVisionConsistency:
            try {
              verdict = check_vision_consistency(candidate, context.image_ref, *models.vision, *models.templates,
                                                 models.unanimous_vote);
            } catch (const ImageUnreadable& e) {
              verdict = FilterVerdict{key, kind, false, OptionSelection::ambiguous(), {},
                                      std::string("ImageUnreadable: ") + e.what(), std::nullopt};
            }
            break;
        }
      } catch (const EndpointUnavailable& e) {
        outcome.status = CascadeOutcome::Status::kDeferred;
        outcome.deferred_reason = e.what();
        return outcome;
      }
      log.record(*verdict);
    }
    outcome.verdicts.push_back(*verdict);
    if (!verdict->passed) {
      outcome.status = CascadeOutcome::Status::kRejected;
      outcome.rejected_at = kind;
      return outcome;
    }
    if (kind == FilterKind::kVisionConsistency) outcome.voting = verdict->voting;
  }
  outcome.status = CascadeOutcome::Status::kRetained;
  return outcome;
}

}  // namespace figqa
