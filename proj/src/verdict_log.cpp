#include "figqa/verification.hpp"

namespace figqa {

Json to_json(const FilterVerdict& verdict) {
  Json out;
  out["candidate"] = verdict.candidate_key;
  out["filter"] = to_string(verdict.filter);
  out["passed"] = verdict.passed;
  out["selection"] = verdict.selection.to_string();
  out["transcripts"] = verdict.transcript_digests;
  if (verdict.voting) {
    const VotingRecord& v = *verdict.voting;
    Json selections = Json::array();
    for (const OptionSelection& s : v.selections) selections.push_back(s.to_string());
    out["selections"] = selections;
    out["responses"] = v.responses;
    out["majority"] = v.majority ? Json(std::string(1, *v.majority)) : Json("Tie");
    out["agreeing_run_index"] = v.agreeing_run_index ? Json(*v.agreeing_run_index) : Json();
    out["reasoning"] = v.reasoning;
  } else {
    out["response"] = verdict.response;
  }
  return out;
}

FilterVerdict verdict_from_json(const Json& record, std::size_t line) {
  FilterVerdict verdict;
  verdict.candidate_key = require_field<std::string>(record, "candidate", line);
  try {
    verdict.filter = filter_kind_from_string(require_field<std::string>(record, "filter", line));
  } catch (const std::invalid_argument& e) {
    throw SchemaViolation(line, "filter", e.what());
  }
  verdict.passed = require_field<bool>(record, "passed", line);
  verdict.selection = OptionSelection::from_string(require_field<std::string>(record, "selection", line));
  verdict.transcript_digests = require_field<std::vector<std::string>>(record, "transcripts", line);
  if (verdict.filter == FilterKind::kVisionConsistency && record.contains("selections")) {
    VotingRecord v;
    const auto selections = require_field<std::vector<std::string>>(record, "selections", line);
    const auto responses = require_field<std::vector<std::string>>(record, "responses", line);
    if (selections.size() != kVoteCount || responses.size() != kVoteCount) {
      throw SchemaViolation(line, "selections", "expected three votes");
    }
    for (int i = 0; i < kVoteCount; ++i) {
      v.selections[static_cast<std::size_t>(i)] = OptionSelection::from_string(selections[static_cast<std::size_t>(i)]);
      v.responses[static_cast<std::size_t>(i)] = responses[static_cast<std::size_t>(i)];
    }
    const auto majority = require_field<std::string>(record, "majority", line);
    if (majority != "Tie") v.majority = majority.at(0);
    if (record.contains("agreeing_run_index") && !record.at("agreeing_run_index").is_null()) {
      v.agreeing_run_index = require_field<int>(record, "agreeing_run_index", line);
    }
    v.reasoning = require_field<std::string>(record, "reasoning", line);
    verdict.response = v.reasoning;
    verdict.voting = std::move(v);
  } else {
    verdict.response = require_field<std::string>(record, "response", line);
  }
  return verdict;
}

VerdictLog::VerdictLog(const std::filesystem::path& path) {
  if (std::filesystem::exists(path)) {
    read_jsonl(
        path,
        [&](const Json& record, std::size_t line) {
          FilterVerdict verdict = verdict_from_json(record, line);
          auto key = std::make_pair(verdict.candidate_key, verdict.filter);
          if (verdicts_.emplace(std::move(key), std::move(verdict)).second) ++replayed_;
        },
        /*tolerate_torn_tail=*/true);
  }
  appender_ = std::make_unique<JsonlAppender>(path);
}

std::optional<FilterVerdict> VerdictLog::find(const std::string& candidate_key, FilterKind filter) const {
  std::lock_guard lock(mutex_);
  const auto it = verdicts_.find({candidate_key, filter});
  if (it == verdicts_.end()) return std::nullopt;
  return it->second;
}

bool VerdictLog::record(const FilterVerdict& verdict) {
  std::lock_guard lock(mutex_);
  auto [it, inserted] = verdicts_.emplace(std::make_pair(verdict.candidate_key, verdict.filter), verdict);
  if (!inserted) return false;
  if (appender_) appender_->append(to_json(verdict));
  return true;
}

std::size_t VerdictLog::size() const {
  std::lock_guard lock(mutex_);
  return verdicts_.size();
}

}  // namespace figqa
