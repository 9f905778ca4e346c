#include <doctest.h>

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "figqa/figure_context.hpp"
#include "figqa/text_util.hpp"

using namespace figqa;

namespace {

// Full-matrix edit distance, written independently of the rolling-row version.
std::size_t oracle_distance(const std::u32string& a, const std::u32string& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
  }
  return d[a.size()][b.size()];
}

std::string random_word(std::mt19937_64& rng) {
  static const std::vector<std::string> kAlphabet = {"a", "b", "c", "d", "é", "λ"};
  std::uniform_int_distribution<int> length(0, 12);
  std::uniform_int_distribution<std::size_t> pick(0, kAlphabet.size() - 1);
  std::string out;
  for (int i = length(rng); i > 0; --i) out += kAlphabet[pick(rng)];
  return out;
}

FigureEnvironment env_with_caption(const std::string& caption) {
  FigureEnvironment env;
  env.caption_raw = caption;
  env.caption_normalized = normalize_caption(caption);
  return env;
}

}  // namespace

TEST_CASE("normalize_caption") {
  CHECK(normalize_caption("\\textbf{Results} for $k=1$") == "Results for k=1");
  CHECK(normalize_caption("plain caption") == "plain caption");
  CHECK(normalize_caption("  a   b  ") == "a b");
  CHECK(normalize_caption("See \\cite{x} and Fig.~\\ref{fig:a}") == "See <cit.> and Fig. <ref>");
  CHECK(normalize_caption("Loss\\label{fig:loss} curve") == "Loss curve");
  CHECK(normalize_caption("$\\alpha$ sweep") == "α sweep");
  CHECK(normalize_caption("unbalanced {brace") == "unbalanced brace");
}

TEST_CASE("levenshtein_similarity examples") {
  CHECK(levenshtein_similarity("abc", "abc") == 1.0);
  CHECK(levenshtein_similarity("abc", "") == 0.0);
  CHECK(levenshtein_similarity("", "") == 1.0);
  CHECK(levenshtein_similarity("kitten", "sitting") == 1.0 - 3.0 / 7.0);
  CHECK(levenshtein_similarity("é", "e") == 0.0);
}

TEST_CASE("levenshtein distance agrees with the full-matrix oracle") {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 1000; ++i) {
    const std::string a = random_word(rng), b = random_word(rng), c = random_word(rng);
    const std::u32string ua = utf8_decode(a), ub = utf8_decode(b), uc = utf8_decode(c);
    const std::size_t d = oracle_distance(ua, ub);
    CHECK(levenshtein_distance(ua, ub) == d);
    CHECK(levenshtein_distance(ub, ua) == d);
    CHECK((d == 0) == (a == b));
    CHECK(oracle_distance(ua, uc) <= d + oracle_distance(ub, uc));
    const std::size_t longest = std::max(ua.size(), ub.size());
    const double expected = longest == 0 ? 1.0 : 1.0 - static_cast<double>(d) / static_cast<double>(longest);
    CHECK(levenshtein_similarity(a, b) == expected);
  }
}

TEST_CASE("match_caption_to_environment") {
  const std::vector<FigureEnvironment> one = {env_with_caption("Training loss over epochs.")};
  CHECK(std::get<std::size_t>(match_caption_to_environment("Training loss over epochs.", one)) == 0);
  CHECK(std::get<std::size_t>(match_caption_to_environment("training  LOSS over epochs.", one)) == 0);

  const std::vector<FigureEnvironment> twins = {env_with_caption("Same caption"), env_with_caption("Same caption")};
  CHECK(std::get<DiscardReason>(match_caption_to_environment("Same caption", twins)).kind ==
        DiscardKind::kAmbiguousMatch);

  const std::string base(100, 'x');
  std::string noisy = base;
  for (int i = 0; i < 15; ++i) noisy[static_cast<std::size_t>(i * 6)] = 'y';
  const std::vector<FigureEnvironment> long_env = {env_with_caption(base)};
  CHECK(std::get<DiscardReason>(match_caption_to_environment(noisy, long_env)).kind ==
        DiscardKind::kNoEnvironmentMatch);

  const std::vector<FigureEnvironment> near = {env_with_caption("abcdefghij")};
  CHECK(std::holds_alternative<DiscardReason>(match_caption_to_environment("abcdefghiJk", near, 1.0)));
  CHECK(std::holds_alternative<std::size_t>(match_caption_to_environment("ABCDEFGHIJ", near, 1.0)));
}

TEST_CASE("find_figure_environments and labels") {
  const std::string body =
      "Intro.\n\n\\begin{figure}[t]\\centering"
      "\\begin{subfigure}{0.4\\linewidth}\\caption{Left}\\label{fig:a}\\end{subfigure}"
      "\\begin{subfigure}{0.4\\linewidth}\\caption{Right}\\label{fig:b}\\end{subfigure}"
      "\\caption{Both panels}\\label{fig:main}\\end{figure}\n\n"
      "\\begin{wrapfigure}{r}{0.3\\textwidth}\\caption{Wrapped}\\end{wrapfigure}";
  const auto envs = find_figure_environments(body);
  REQUIRE(envs.size() == 2);
  CHECK(envs[0].caption_raw == "Both panels");
  CHECK(extract_figure_labels(envs[0]) == std::vector<std::string>{"fig:a", "fig:b", "fig:main"});
  CHECK(envs[0].outer_labels == std::vector<std::string>{"fig:main"});
  CHECK(envs[1].caption_raw == "Wrapped");
  CHECK(extract_figure_labels(envs[1]).empty());
  CHECK(body.substr(envs[0].begin, 14) == "\\begin{figure}");
}

TEST_CASE("find_citing_paragraphs") {
  const std::vector<std::string> paragraphs = {
      "As shown in \\cref{fig:x}, accuracy rises.", "Other text \\ref{fig:xy}.", "Both \\cref{fig:y,fig:x}.",
      "\\begin{figure}\\caption{c}\\label{fig:x}\\end{figure}", "Again \\autoref{fig:x} and \\Cref{fig:x}."};
  const auto cited = find_citing_paragraphs("fig:x", paragraphs);
  CHECK(cited == std::vector<std::string>{paragraphs[0], paragraphs[2], paragraphs[4]});
  CHECK(find_citing_paragraphs("fig:q", paragraphs).empty());
  CHECK(find_citing_paragraphs(std::vector<std::string>{"fig:xy", "fig:y"}, paragraphs) ==
        std::vector<std::string>{paragraphs[1], paragraphs[2]});
}

TEST_CASE("find_citing_paragraphs output is a subsequence of the input") {
  std::mt19937_64 rng(3);
  const std::vector<std::string> kinds = {"\\ref{L}", "\\ref{M}", "text", "\\cref{M,L}", "\\autoref{LL}"};
  std::uniform_int_distribution<std::size_t> pick(0, kinds.size() - 1);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> paragraphs;
    for (int i = 0; i < 8; ++i) paragraphs.push_back(std::to_string(i) + " " + kinds[pick(rng)]);
    const auto cited = find_citing_paragraphs("L", paragraphs);
    auto it = paragraphs.begin();
    for (const std::string& p : cited) {
      it = std::find(it, paragraphs.end(), p);
      REQUIRE(it != paragraphs.end());
      ++it;
    }
  }
}

TEST_CASE("build_figure_contexts conserves figures") {
  RawPaper raw;
  raw.arxiv_id = "2301.00002";
  raw.primary_category = "cs";
  raw.figures = {{1, "img/a.png", "Loss curves for all models."},
                 {2, "img/b.png", ""},
                 {3, "img/c.png", "An uncited diagram."},
                 {4, "img/d.png", "No label here."},
                 {5, "img/e.png", "Something absent from the source."}};
  CleanPaper clean;
  clean.arxiv_id = raw.arxiv_id;
  clean.body =
      "Fig. \\ref{fig:loss} shows loss.\n\n"
      "\\begin{figure}\\caption{Loss curves for all models.}\\label{fig:loss}\\end{figure}\n\n"
      "\\begin{figure}\\caption{An uncited diagram.}\\label{fig:diag}\\end{figure}\n\n"
      "\\begin{figure}\\caption{No label here.}\\end{figure}\n\n"
      "Later, \\cref{fig:loss} again.";
  clean.paragraphs = segment_paragraphs(clean.body);
  const ExtractionResult result = build_figure_contexts(raw, clean);
  CHECK(result.contexts.size() + result.discards.size() == raw.figures.size());
  REQUIRE(result.contexts.size() == 1);
  const FigureContext& ctx = result.contexts[0];
  CHECK(ctx.figure_index == 1);
  CHECK(ctx.label == "fig:loss");
  CHECK(ctx.citing_paragraph_count == 2);
  CHECK(ctx.context == "Fig. \\ref{fig:loss} shows loss.\n\nLater, \\cref{fig:loss} again.");
  CHECK(ctx.caption == "Loss curves for all models.");
  CHECK(ctx.image_ref == "img/a.png");
  REQUIRE(result.discards.size() == 4);
  CHECK(result.discards[0].reason.kind == DiscardKind::kEmptyCaption);
  CHECK(result.discards[1].reason.kind == DiscardKind::kNoCitingParagraph);
  CHECK(result.discards[2].reason.kind == DiscardKind::kNoLabel);
  CHECK(result.discards[3].reason.kind == DiscardKind::kNoEnvironmentMatch);
}

TEST_CASE("figures sharing one environment are both ambiguous") {
  RawPaper raw;
  raw.arxiv_id = "p";
  raw.figures = {{1, "a.png", "Accuracy versus model size"}, {2, "b.png", "Accuracy versus model size."}};
  CleanPaper clean;
  clean.body = "\\begin{figure}\\caption{Accuracy versus model size}\\label{fig:s}\\end{figure}\n\nSee \\ref{fig:s}.";
  clean.paragraphs = segment_paragraphs(clean.body);
  const ExtractionResult result = build_figure_contexts(raw, clean);
  CHECK(result.contexts.empty());
  REQUIRE(result.discards.size() == 2);
  CHECK(result.discards[0].reason.kind == DiscardKind::kAmbiguousMatch);
  CHECK(result.discards[1].reason.kind == DiscardKind::kAmbiguousMatch);
}

TEST_CASE("discard kind names round-trip") {
  for (DiscardKind kind : {DiscardKind::kEmptyCaption, DiscardKind::kNoEnvironmentMatch, DiscardKind::kAmbiguousMatch,
                           DiscardKind::kNoLabel, DiscardKind::kNoCitingParagraph}) {
    CHECK(discard_kind_from_string(to_string(kind)) == kind);
  }
}
