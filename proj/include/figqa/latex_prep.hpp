#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace figqa {

inline constexpr int kDefaultMacroDepth = 32;
inline constexpr std::string_view kDefaultParagraphSeparator = "\n\n";

struct FigureCaptionPair {
  int figure_index = 0;
  std::string image_ref;
  std::string caption;
};

struct RawPaper {
  std::string arxiv_id;
  std::string primary_category;
  std::string latex_source;
  std::vector<FigureCaptionPair> figures;  // source order
};

struct CleanPaper {
  std::string arxiv_id;
  std::string body;
  std::vector<std::string> paragraphs;
};

/// Removes `%` line comments and `comment` environments. Escaped `\%` and the
/// contents of verbatim-like environments and `\verb` spans are preserved. A
/// line holding nothing but a comment is removed together with its newline so
/// it cannot masquerade as a paragraph break; inline comments keep the newline.
std::string strip_comments(std::string_view latex);

/// Expands \newcommand / \renewcommand / \providecommand / \def macros with
/// positional arguments. Definitions are removed from the output. Throws
/// RecursionLimitExceeded when expansion does not settle within `max_depth`
/// passes.
std::string expand_macros(std::string_view latex, int max_depth = kDefaultMacroDepth);

/// Drops thebibliography environments and \bibliography{...} /
/// \printbibliography commands.
std::string strip_bibliography(std::string_view latex);

/// Maximal non-empty, trimmed chunks between separators.
std::vector<std::string> segment_paragraphs(std::string_view body,
                                            std::string_view separator = kDefaultParagraphSeparator);

struct PrepOptions {
  int macro_depth = kDefaultMacroDepth;
  std::string paragraph_separator = std::string(kDefaultParagraphSeparator);
};

/// Full cleaning pass: comments, macros, bibliography, line-ending and
/// trailing-whitespace normalization, then paragraph segmentation.
CleanPaper prepare_paper(const RawPaper& paper, const PrepOptions& options = {});

}  // namespace figqa
