#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace figqa {

enum class TemplateName {
  kClaimExtract,
  kQaGenerate,
  kSourceCheck,
  kVisdepCheck,
  kVisionAnswer,
  kFigureTypeLabel,
  kQuestionTypeLabel,
  kEvalZeroShot,
};

inline constexpr std::array<TemplateName, 8> kAllTemplates = {
    TemplateName::kClaimExtract,    TemplateName::kQaGenerate,        TemplateName::kSourceCheck,
    TemplateName::kVisdepCheck,     TemplateName::kVisionAnswer,      TemplateName::kFigureTypeLabel,
    TemplateName::kQuestionTypeLabel, TemplateName::kEvalZeroShot};

std::string_view to_string(TemplateName name);

struct PromptTemplate {
  TemplateName name;
  std::string body;
};

using TemplateVars = std::map<std::string, std::string, std::less<>>;

/// Replaces every {{ name }} marker with vars[name]. Substituted values are
/// not rescanned. Throws MissingVariable for a referenced name absent from vars.
std::string render_template(const PromptTemplate& tmpl, const TemplateVars& vars);

/// Loads one "<name>.txt" file per template from a prompt directory.
class TemplateLibrary {
 public:
  static TemplateLibrary load(const std::filesystem::path& directory);
  static TemplateLibrary from_bodies(std::map<TemplateName, std::string> bodies);

  const PromptTemplate& get(TemplateName name) const;
  std::string render(TemplateName name, const TemplateVars& vars) const;

  /// Hash over all template bodies, recorded in run manifests.
  std::string digest() const;

 private:
  std::map<TemplateName, PromptTemplate> templates_;
};

}  // namespace figqa
