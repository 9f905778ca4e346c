#pragma once

#include <map>
#include <string>
#include <vector>

#include "figqa/dataset.hpp"
#include "figqa/gateway.hpp"
#include "figqa/jsonl.hpp"
#include "figqa/response_parsing.hpp"
#include "figqa/templates.hpp"

namespace figqa {

inline constexpr std::string_view kUnlabeledCategory = "unlabeled";

struct CategoryTally {
  long long correct = 0;
  long long total = 0;

  /// Percentage rounded half-up to two decimals; 0 for an empty category.
  double accuracy() const;
  bool operator==(const CategoryTally&) const = default;
};

struct EvalItem {
  std::string key;
  OptionSelection predicted;
  bool correct = false;
};

struct EvalResult {
  std::string model_name;
  CategoryTally overall;
  std::map<std::string, CategoryTally> by_domain;
  std::map<std::string, CategoryTally> by_figure_type;
  std::map<std::string, CategoryTally> by_question_type;
  std::vector<EvalItem> per_item;
  std::vector<std::string> unevaluated;  // keys whose requests kept failing
};

/// 100 * correct / total in hundredths of a percent, rounded half-up.
long long accuracy_hundredths(long long correct, long long total);

/// Folds per-item outcomes into overall and per-category tallies.
EvalResult aggregate(std::string model_name, const std::vector<VerifiedRecord>& records,
                     const std::vector<EvalItem>& items, std::vector<std::string> unevaluated);

/// Zero-shot multiple choice with figure and caption, options in stored order.
/// Unparseable or abstaining predictions count as wrong. Requires a vision
/// endpoint at temperature 0.
EvalResult evaluate(ModelGateway& model, const TemplateLibrary& templates, const std::vector<VerifiedRecord>& records,
                    int concurrency = 1);

/// Category tables (overall, domain, figure type, question type).
std::string format_eval_report(const EvalResult& result);
Json to_json(const EvalResult& result);

}  // namespace figqa
