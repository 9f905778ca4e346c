#include <doctest.h>

#include <random>
#include <string>

#include "figqa/errors.hpp"
#include "figqa/latex_prep.hpp"

using namespace figqa;

namespace {

std::string random_latexish(std::mt19937_64& rng) {
  static const std::vector<std::string> kPieces = {
      "a",  "b", " ",  "\n", "%",  "\\%", "\\\\", "\\", "x % y", "{",  "}",  "\\verb|%|", "\\begin{verbatim}",
      "\\end{verbatim}", "\\begin{comment}", "\\end{comment}", "\n\n", "\t", "é", "%%", "\\section{A}"};
  std::uniform_int_distribution<std::size_t> count(0, 30);
  std::uniform_int_distribution<std::size_t> pick(0, kPieces.size() - 1);
  std::string out;
  for (std::size_t i = count(rng); i > 0; --i) out += kPieces[pick(rng)];
  return out;
}

}  // namespace

TEST_CASE("strip_comments removes line comments and keeps the newline") {
  CHECK(strip_comments("a % note\nb") == "a \nb");
  CHECK(strip_comments("rate is 5\\% high") == "rate is 5\\% high");
  CHECK(strip_comments("\\begin{verbatim}x % y\\end{verbatim}") == "\\begin{verbatim}x % y\\end{verbatim}");
}

TEST_CASE("strip_comments drops whole-line comments with their newline") {
  CHECK(strip_comments("para one\n% aside\npara two") == "para one\npara two");
  CHECK(strip_comments("a\\\\% comment after a line break\nb") == "a\\\\\nb");
}

TEST_CASE("strip_comments removes comment environments and keeps verb spans") {
  CHECK(strip_comments("x\\begin{comment}hidden % text\\end{comment}y") == "xy");
  CHECK(strip_comments("\\verb|50%| done % gone") == "\\verb|50%| done ");
  CHECK(strip_comments("\\begin{lstlisting}\n% code\n\\end{lstlisting}") ==
        "\\begin{lstlisting}\n% code\n\\end{lstlisting}");
}

TEST_CASE("strip_comments is idempotent on random LaTeX-like strings") {
  std::mt19937_64 rng(20240601);
  for (int i = 0; i < 1000; ++i) {
    const std::string input = random_latexish(rng);
    const std::string once = strip_comments(input);
    CHECK_MESSAGE(strip_comments(once) == once, "input: " << input);
  }
}

TEST_CASE("expand_macros substitutes definitions") {
  CHECK(expand_macros("\\newcommand{\\foo}{bar} use \\foo now") == " use bar now");
  CHECK(expand_macros("\\newcommand{\\id}[1]{#1} \\id{x}") == " x");
  CHECK(expand_macros("\\renewcommand{\\pair}[2]{(#1,#2)}\\pair{a}{b}") == "(a,b)");
  CHECK(expand_macros("\\def\\greet#1{hi #1}\\greet{you}") == "hi you");
  CHECK(expand_macros("\\newcommand{\\foo}{bar}\\foobar \\foo") == "\\foobar bar");
}

TEST_CASE("expand_macros supports optional-argument defaults and nesting") {
  CHECK(expand_macros("\\newcommand{\\opt}[2][dflt]{#1-#2}\\opt{z} \\opt[q]{z}") == "dflt-z q-z");
  CHECK(expand_macros("\\newcommand{\\a}{\\b}\\newcommand{\\b}{c}\\a") == "c");
}

TEST_CASE("expand_macros detects self reference") {
  CHECK_THROWS_AS(expand_macros("\\def\\a{\\a} \\a"), RecursionLimitExceeded);
  CHECK_THROWS_AS(expand_macros("\\newcommand{\\x}{\\y}\\newcommand{\\y}{\\x}\\x"), RecursionLimitExceeded);
}

TEST_CASE("expand_macros is the identity on macro-free input") {
  const std::string text = "Plain \\textbf{bold} text with \\ref{fig:a} and $x^2$.";
  CHECK(expand_macros(text) == text);
}

TEST_CASE("strip_bibliography") {
  CHECK(strip_bibliography("body\n\\begin{thebibliography}{9}\\bibitem{a} A\\end{thebibliography}") == "body\n");
  CHECK(strip_bibliography("no bibliography here") == "no bibliography here");
  CHECK(strip_bibliography("a\\begin{thebibliography}{1}x\\end{thebibliography}b"
                           "\\begin{thebibliography}{1}y\\end{thebibliography}c") == "abc");
  CHECK(strip_bibliography("t \\bibliography{refs} \\printbibliography[heading=none] u") == "t   u");
}

TEST_CASE("segment_paragraphs") {
  CHECK(segment_paragraphs("p1\n\np2", "\n\n") == std::vector<std::string>{"p1", "p2"});
  CHECK(segment_paragraphs("p1") == std::vector<std::string>{"p1"});
  CHECK(segment_paragraphs("p1\n\n\n\np2") == std::vector<std::string>{"p1", "p2"});
  CHECK(segment_paragraphs("  \n\n  ").empty());
}

TEST_CASE("segment_paragraphs join-then-resegment is a fixed point") {
  std::mt19937_64 rng(7);
  const std::vector<std::string> pieces = {"p", "q r", "\n", "\n\n", " ", "\n\n\n", "s"};
  std::uniform_int_distribution<std::size_t> pick(0, pieces.size() - 1);
  for (int i = 0; i < 500; ++i) {
    std::string body;
    for (int k = 0; k < 12; ++k) body += pieces[pick(rng)];
    const auto paragraphs = segment_paragraphs(body);
    std::string joined;
    for (std::size_t k = 0; k < paragraphs.size(); ++k) {
      CHECK_FALSE(paragraphs[k].empty());
      if (k > 0) joined += "\n\n";
      joined += paragraphs[k];
    }
    CHECK(segment_paragraphs(joined) == paragraphs);
  }
}

TEST_CASE("prepare_paper produces comment-free, bibliography-free paragraphs") {
  RawPaper raw;
  raw.arxiv_id = "2301.00001";
  raw.latex_source =
      "\\newcommand{\\model}{FooNet}\n"
      "We train \\model{}. % internal note\n"
      "\n"
      "Results at 5\\% error.   \n"
      "\\begin{thebibliography}{1}\\bibitem{x} X\\end{thebibliography}\n";
  const CleanPaper clean = prepare_paper(raw);
  CHECK(clean.arxiv_id == "2301.00001");
  REQUIRE(clean.paragraphs.size() == 2);
  CHECK(clean.paragraphs[0] == "We train FooNet{}.");
  CHECK(clean.paragraphs[1] == "Results at 5\\% error.");

  raw.latex_source = "\\def\\loop{\\loop}\\loop";
  CHECK_THROWS_AS(prepare_paper(raw), RecursionLimitExceeded);
}
