#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "figqa/latex_prep.hpp"

namespace figqa {

inline constexpr double kDefaultMatchThreshold = 0.9;

struct FigureEnvironment {
  std::size_t begin = 0;  // offset of "\begin{figure...}" in the body
  std::size_t end = 0;    // one past "\end{figure...}"
  std::string caption_raw;
  std::string caption_normalized;
  std::vector<std::string> labels;       // every \label, document order
  std::vector<std::string> outer_labels;  // labels outside nested environments
};

struct FigureContext {
  std::string arxiv_id;
  std::string primary_category;
  int figure_index = 0;
  std::string image_ref;
  std::string caption;        // corpus caption, carried downstream
  std::string latex_caption;  // provenance
  std::string label;
  std::string context;
  int citing_paragraph_count = 0;
};

enum class DiscardKind { kEmptyCaption, kNoEnvironmentMatch, kAmbiguousMatch, kNoLabel, kNoCitingParagraph };

std::string_view to_string(DiscardKind kind);
DiscardKind discard_kind_from_string(std::string_view name);

struct DiscardReason {
  DiscardKind kind;
  std::string detail;
};

struct FigureDiscard {
  std::string arxiv_id;
  int figure_index = 0;
  DiscardReason reason;
};

/// LaTeX caption to plain text, in the spirit of a latex-to-text converter:
/// formatting commands keep their argument, \cite-like commands become
/// "<cit.>", \ref-like commands become "<ref>", math delimiters are dropped,
/// whitespace is collapsed. Never throws.
std::string normalize_caption(std::string_view caption_latex);

/// Unit-cost edit distance over Unicode scalar values.
std::size_t levenshtein_distance(std::u32string_view a, std::u32string_view b);

/// 1 - d(a,b) / max(|a|,|b|); 1.0 when both are empty. Lengths in code points.
double levenshtein_similarity(std::string_view a, std::string_view b);

/// Caption key used for matching: normalized, lowercased, whitespace collapsed.
std::string caption_match_key(std::string_view caption);

/// Locates figure, figure* and wrapfigure environments in a cleaned body.
std::vector<FigureEnvironment> find_figure_environments(std::string_view body);

/// Labels inside the environment's span, in document order.
std::vector<std::string> extract_figure_labels(const FigureEnvironment& env);

/// Index of the unique environment whose caption similarity reaches
/// `threshold`, or the reason no unique match exists.
std::variant<std::size_t, DiscardReason> match_caption_to_environment(
    std::string_view corpus_caption, const std::vector<FigureEnvironment>& environments,
    double threshold = kDefaultMatchThreshold);

inline const std::vector<std::string> kDefaultCitationCommands = {"ref", "cref", "autoref"};

/// Paragraphs citing `label` through one of the citation commands, in order.
/// Paragraphs that define the label (the figure environment itself) are
/// skipped.
std::vector<std::string> find_citing_paragraphs(std::string_view label, const std::vector<std::string>& paragraphs,
                                                const std::vector<std::string>& commands = kDefaultCitationCommands);

/// As above, but a paragraph counts when it cites any of `labels`.
std::vector<std::string> find_citing_paragraphs(const std::vector<std::string>& labels,
                                                const std::vector<std::string>& paragraphs,
                                                const std::vector<std::string>& commands = kDefaultCitationCommands);

struct ExtractionOptions {
  double threshold = kDefaultMatchThreshold;
  std::string paragraph_separator = std::string(kDefaultParagraphSeparator);
  std::vector<std::string> citation_commands = kDefaultCitationCommands;
};

struct ExtractionResult {
  std::vector<FigureContext> contexts;
  std::vector<FigureDiscard> discards;
};

/// Every figure-caption pair of `raw` lands in exactly one of the two lists.
ExtractionResult build_figure_contexts(const RawPaper& raw, const CleanPaper& clean,
                                       const ExtractionOptions& options = {});

}  // namespace figqa
