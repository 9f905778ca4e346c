#include "figqa/eval_harness.hpp"

#include <iomanip>
#include <optional>
#include <sstream>
#include <unordered_map>

#include "figqa/errors.hpp"
#include "figqa/worker_pool.hpp"

namespace figqa {
namespace {

std::string hundredths_to_string(long long value) {
  std::ostringstream out;
  out << value / 100 << '.' << std::setw(2) << std::setfill('0') << value % 100;
  return out.str();
}

void tally(std::map<std::string, CategoryTally>& table, const std::string& category, bool correct) {
  CategoryTally& t = table[category];
  ++t.total;
  if (correct) ++t.correct;
}

void append_table(std::ostringstream& out, const std::string& title, const std::map<std::string, CategoryTally>& table) {
  out << '\n' << title << '\n';
  out << std::left << std::setw(28) << "Category" << std::right << std::setw(9) << "Correct" << std::setw(8) << "Total"
      << std::setw(11) << "Accuracy" << '\n';
  for (const auto& [category, t] : table) {
    out << std::left << std::setw(28) << category << std::right << std::setw(9) << t.correct << std::setw(8) << t.total
        << std::setw(11) << hundredths_to_string(accuracy_hundredths(t.correct, t.total)) << '\n';
  }
}

Json table_json(const std::map<std::string, CategoryTally>& table) {
  Json out = Json::object();
  for (const auto& [category, t] : table) {
    out[category] = Json{{"correct", t.correct}, {"total", t.total}, {"accuracy", t.accuracy()}};
  }
  return out;
}

}  // namespace

long long accuracy_hundredths(long long correct, long long total) {
  if (total <= 0) return 0;
  return (20000 * correct + total) / (2 * total);
}

double CategoryTally::accuracy() const { return static_cast<double>(accuracy_hundredths(correct, total)) / 100.0; }

EvalResult aggregate(std::string model_name, const std::vector<VerifiedRecord>& records,
                     const std::vector<EvalItem>& items, std::vector<std::string> unevaluated) {
  std::unordered_map<std::string, const VerifiedRecord*> by_key;
  for (const VerifiedRecord& record : records) by_key[record.key] = &record;
  EvalResult result;
  result.model_name = std::move(model_name);
  result.unevaluated = std::move(unevaluated);
  for (const EvalItem& item : items) {
    const auto it = by_key.find(item.key);
    if (it == by_key.end()) throw std::invalid_argument("evaluated item has no record: " + item.key);
    const VerifiedRecord& record = *it->second;
    ++result.overall.total;
    if (item.correct) ++result.overall.correct;
    tally(result.by_domain, record.primary_category, item.correct);
    tally(result.by_figure_type, record.figure_type.value_or(std::string(kUnlabeledCategory)), item.correct);
    tally(result.by_question_type, record.question_type.value_or(std::string(kUnlabeledCategory)), item.correct);
    result.per_item.push_back(item);
  }
  return result;
}

EvalResult evaluate(ModelGateway& model, const TemplateLibrary& templates, const std::vector<VerifiedRecord>& records,
                    int concurrency) {
  if (model.config().temperature != 0.0) throw ConfigError("evaluation requires greedy decoding (temperature 0)");
  if (model.config().role != ModelRole::kVision) throw ConfigError("evaluation requires a vision endpoint");
  std::vector<std::optional<EvalItem>> slots(records.size());
  parallel_for(records.size(), concurrency, [&](std::size_t i) {
    const VerifiedRecord& record = records[i];
    const std::string prompt = templates.render(
        TemplateName::kEvalZeroShot,
        {{"caption", record.caption}, {"question", record.question}, {"options", format_options(record.options)}});
    try {
      const Completion reply = model.complete_vision(prompt, record.image_ref);
      EvalItem item;
      item.key = record.key;
      item.predicted = parse_option_tag_or_ambiguous(reply.text, kOptionCount);
      item.correct = item.predicted.is_letter() && item.predicted.letter == record.correct_letter();
      slots[i] = std::move(item);
    } catch (const EndpointUnavailable&) {
    } catch (const ImageUnreadable&) {
    }
  });
  std::vector<EvalItem> items;
  std::vector<std::string> unevaluated;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (slots[i]) {
      items.push_back(std::move(*slots[i]));
    } else {
      unevaluated.push_back(records[i].key);
    }
  }
  return aggregate(model.config().model_name, records, items, std::move(unevaluated));
}

std::string format_eval_report(const EvalResult& result) {
  std::ostringstream out;
  out << "Model: " << result.model_name << '\n';
  out << "Overall accuracy: " << hundredths_to_string(accuracy_hundredths(result.overall.correct, result.overall.total))
      << "% (" << result.overall.correct << "/" << result.overall.total << ")\n";
  if (!result.unevaluated.empty()) out << "Unevaluated: " << result.unevaluated.size() << '\n';
  append_table(out, "By scientific domain", result.by_domain);
  append_table(out, "By figure type", result.by_figure_type);
  append_table(out, "By question type", result.by_question_type);
  return out.str();
}

Json to_json(const EvalResult& result) {
  Json out;
  out["model"] = result.model_name;
  out["overall"] = Json{{"correct", result.overall.correct},
                        {"total", result.overall.total},
                        {"accuracy", result.overall.accuracy()}};
  out["by_domain"] = table_json(result.by_domain);
  out["by_figure_type"] = table_json(result.by_figure_type);
  out["by_question_type"] = table_json(result.by_question_type);
  Json items = Json::array();
  for (const EvalItem& item : result.per_item) {
    items.push_back(Json{{"key", item.key}, {"predicted", item.predicted.to_string()}, {"correct", item.correct}});
  }
  out["per_item"] = items;
  out["unevaluated"] = result.unevaluated;
  return out;
}

}  // namespace figqa
