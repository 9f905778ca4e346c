#include "figqa/dataset.hpp"

#include <cctype>

#include "figqa/response_parsing.hpp"
#include "figqa/text_util.hpp"

namespace figqa {

const std::vector<std::string>& taxonomy_vocabulary(TaxonomyKind kind) {
  return kind == TaxonomyKind::kFigureType ? kFigureTypes : kQuestionTypes;
}

std::string_view to_string(TaxonomyKind kind) {
  return kind == TaxonomyKind::kFigureType ? "figure_type" : "question_type";
}

std::optional<std::string> parse_taxonomy_reply(std::string_view reply, TaxonomyKind kind) {
  const std::optional<std::string> tagged = extract_tag(reply, "label");
  std::string text = collapse_whitespace(tagged ? *tagged : std::string(reply));
  while (!text.empty() && (std::ispunct(static_cast<unsigned char>(text.back())) || text.back() == ' ')) text.pop_back();
  while (!text.empty() && (std::ispunct(static_cast<unsigned char>(text.front())) || text.front() == ' ')) {
    text.erase(text.begin());
  }
  const std::string wanted = ascii_lower(text);
  for (const std::string& entry : taxonomy_vocabulary(kind)) {
    if (ascii_lower(entry) == wanted) return entry;
  }
  return std::nullopt;
}

TaxonomyLabel annotate_taxonomy(const VerifiedRecord& record, TaxonomyKind kind, ModelGateway& model,
                                const TemplateLibrary& templates) {
  TaxonomyLabel label{kind, std::nullopt, model.config().model_name};
  for (int sample = 0; sample < 2 && !label.value; ++sample) {
    Completion reply;
    if (kind == TaxonomyKind::kFigureType) {
      const std::string prompt = templates.render(TemplateName::kFigureTypeLabel, {{"caption", record.caption}});
      reply = model.complete_vision(prompt, record.image_ref, sample);
    } else {
      const std::string prompt = templates.render(
          TemplateName::kQuestionTypeLabel,
          {{"question", record.question}, {"options", format_options(record.options)}});
      reply = model.complete_text(prompt, sample);
    }
    label.value = parse_taxonomy_reply(reply.text, kind);
  }
  return label;
}

}  // namespace figqa
