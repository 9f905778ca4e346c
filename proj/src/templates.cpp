#include "figqa/templates.hpp"

#include <fstream>
#include <sstream>

#include "figqa/digest.hpp"
#include "figqa/errors.hpp"
#include "figqa/text_util.hpp"

namespace figqa {

std::string_view to_string(TemplateName name) {
  switch (name) {
    case TemplateName::kClaimExtract: return "claim_extract";
    case TemplateName::kQaGenerate: return "qa_generate";
    case TemplateName::kSourceCheck: return "source_check";
    case TemplateName::kVisdepCheck: return "visdep_check";
    case TemplateName::kVisionAnswer: return "vision_answer";
    case TemplateName::kFigureTypeLabel: return "figure_type_label";
    case TemplateName::kQuestionTypeLabel: return "question_type_label";
    case TemplateName::kEvalZeroShot: return "eval_zero_shot";
  }
  return "unknown";
}

std::string render_template(const PromptTemplate& tmpl, const TemplateVars& vars) {
  const std::string_view body = tmpl.body;
  std::string out;
  out.reserve(body.size());
  std::size_t pos = 0;
  while (pos < body.size()) {
    const std::size_t open = body.find("{{", pos);
    if (open == std::string_view::npos) {
      out.append(body.substr(pos));
      break;
    }
    const std::size_t close = body.find("}}", open + 2);
    if (close == std::string_view::npos) {
      out.append(body.substr(pos));
      break;
    }
    out.append(body.substr(pos, open - pos));
    const std::string_view name = trim_view(body.substr(open + 2, close - open - 2));
    const auto it = vars.find(name);
    if (it == vars.end()) throw MissingVariable(std::string(name));
    out += it->second;
    pos = close + 2;
  }
  return out;
}

TemplateLibrary TemplateLibrary::load(const std::filesystem::path& directory) {
  std::map<TemplateName, std::string> bodies;
  for (TemplateName name : kAllTemplates) {
    const auto path = directory / (std::string(to_string(name)) + ".txt");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("prompt template not found: " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    bodies[name] = buffer.str();
  }
  return from_bodies(std::move(bodies));
}

TemplateLibrary TemplateLibrary::from_bodies(std::map<TemplateName, std::string> bodies) {
  TemplateLibrary library;
  for (auto& [name, body] : bodies) library.templates_[name] = PromptTemplate{name, std::move(body)};
  return library;
}

const PromptTemplate& TemplateLibrary::get(TemplateName name) const {
  const auto it = templates_.find(name);
  if (it == templates_.end()) throw ConfigError("prompt template not loaded: " + std::string(to_string(name)));
  return it->second;
}

std::string TemplateLibrary::render(TemplateName name, const TemplateVars& vars) const {
  return render_template(get(name), vars);
}

std::string TemplateLibrary::digest() const {
  std::string joined;
  for (const auto& [name, tmpl] : templates_) {
    joined += to_string(name);
    joined += '\0';
    joined += tmpl.body;
    joined += '\0';
  }
  return sha256_hex(joined);
}

}  // namespace figqa
