#include "figqa/figure_context.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <map>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "figqa/text_util.hpp"

namespace figqa {
namespace {

const std::unordered_set<std::string> kCiteCommands = {
    "cite",    "citep",   "citet",      "citealp",  "citealt",   "citeauthor", "citeyear",
    "Cite",    "Citep",   "Citet",      "parencite", "textcite", "autocite",   "footcite"};
const std::unordered_set<std::string> kRefCommands = {"ref",     "cref",   "Cref",    "autoref",
                                                      "eqref",   "pageref", "subref", "nameref"};
// Commands whose arguments carry no caption text.
const std::unordered_map<std::string, int> kDropWithArgs = {
    {"label", 1}, {"includegraphics", 1}, {"vspace", 1}, {"hspace", 1},
    {"color", 1}, {"rule", 2},            {"setlength", 2}};
// Commands whose first argument is dropped and the rest kept.
const std::unordered_set<std::string> kDropFirstArg = {"textcolor", "colorbox", "href"};

const std::unordered_map<std::string, std::string> kSymbols = {
    {"alpha", "α"},  {"beta", "β"},     {"gamma", "γ"},   {"delta", "δ"},    {"epsilon", "ε"},
    {"varepsilon", "ε"}, {"zeta", "ζ"}, {"eta", "η"},     {"theta", "θ"},    {"iota", "ι"},
    {"kappa", "κ"},  {"lambda", "λ"},   {"mu", "μ"},      {"nu", "ν"},       {"xi", "ξ"},
    {"pi", "π"},     {"rho", "ρ"},      {"sigma", "σ"},   {"tau", "τ"},      {"phi", "φ"},
    {"varphi", "φ"}, {"chi", "χ"},      {"psi", "ψ"},     {"omega", "ω"},    {"Gamma", "Γ"},
    {"Delta", "Δ"},  {"Theta", "Θ"},    {"Lambda", "Λ"},  {"Xi", "Ξ"},       {"Pi", "Π"},
    {"Sigma", "Σ"},  {"Phi", "Φ"},      {"Psi", "Ψ"},     {"Omega", "Ω"},    {"times", "×"},
    {"pm", "±"},     {"cdot", "·"},     {"leq", "≤"},     {"le", "≤"},       {"geq", "≥"},
    {"ge", "≥"},     {"neq", "≠"},      {"approx", "≈"},  {"sim", "~"},      {"infty", "∞"},
    {"rightarrow", "→"}, {"to", "→"},   {"leftarrow", "←"}, {"ldots", "…"},  {"dots", "…"},
    {"textendash", "–"}, {"textemdash", "—"}, {"LaTeX", "LaTeX"}, {"TeX", "TeX"},
    {"degree", "°"}, {"circ", "∘"},     {"partial", "∂"}, {"nabla", "∇"},    {"sum", "∑"},
    {"prod", "∏"},   {"int", "∫"},      {"in", "∈"},      {"ell", "ℓ"}};

std::size_t skip_spaces(std::string_view text, std::size_t pos) {
  while (pos < text.size() && is_ascii_space(text[pos])) ++pos;
  return pos;
}

// Skips [..] optional arguments; returns the new position.
std::size_t skip_optional_args(std::string_view text, std::size_t pos) {
  while (true) {
    const std::size_t probe = skip_spaces(text, pos);
    if (probe >= text.size() || text[probe] != '[') return pos;
    const std::size_t close = text.find(']', probe);
    if (close == std::string_view::npos) return pos;
    pos = close + 1;
  }
}

// Skips one braced argument (or a single token); returns the new position.
std::size_t skip_argument(std::string_view text, std::size_t pos) {
  const std::size_t probe = skip_spaces(text, pos);
  if (probe >= text.size()) return pos;
  if (text[probe] == '{') {
    const std::size_t close = find_matching_brace(text, probe);
    return close == std::string_view::npos ? text.size() : close + 1;
  }
  return probe + 1;
}

void append_plain_text(std::string_view text, std::string& out) {
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (c == '\\') {
      if (i + 1 >= text.size()) {
        ++i;
        continue;
      }
      const char next = text[i + 1];
      if (!is_ascii_letter(next)) {
        switch (next) {
          case '%': case '&': case '_': case '#': case '$': case '{': case '}':
            out.push_back(next);
            break;
          case '\\': case ' ': case ',': case ';': case ':': case '!': case '\n':
            out.push_back(' ');
            break;
          default:
            break;  // accents and math delimiters \( \) \[ \]
        }
        i += 2;
        continue;
      }
      std::size_t end = i + 1;
      while (end < text.size() && is_ascii_letter(text[end])) ++end;
      const std::string name(text.substr(i + 1, end - i - 1));
      if (end < text.size() && text[end] == '*') ++end;
      if (kCiteCommands.count(name)) {
        out += "<cit.>";
        i = skip_argument(text, skip_optional_args(text, end));
        continue;
      }
      if (kRefCommands.count(name)) {
        out += "<ref>";
        i = skip_argument(text, skip_optional_args(text, end));
        continue;
      }
      if (auto drop = kDropWithArgs.find(name); drop != kDropWithArgs.end()) {
        std::size_t cur = skip_optional_args(text, end);
        for (int k = 0; k < drop->second; ++k) cur = skip_argument(text, cur);
        i = cur;
        continue;
      }
      if (kDropFirstArg.count(name)) {
        i = skip_argument(text, skip_optional_args(text, end));
        continue;
      }
      if (auto sym = kSymbols.find(name); sym != kSymbols.end()) out += sym->second;
      // Formatting and unknown commands vanish; a following group is emitted
      // as ordinary text.
      i = end;
      continue;
    }
    if (c == '$' || c == '{' || c == '}') {
      ++i;
      continue;
    }
    if (c == '~') {
      out.push_back(' ');
      ++i;
      continue;
    }
    out.push_back(c);
    ++i;
  }
}

bool matches_at(std::string_view text, std::size_t pos, std::string_view token) {
  return text.compare(pos, token.size(), token) == 0;
}

// Reads "\begin{name}" or "\end{name}" at pos; returns the name and advances.
bool read_env_tag(std::string_view text, std::size_t& pos, std::string_view tag, std::string& name) {
  if (!matches_at(text, pos, tag)) return false;
  const std::size_t open = pos + tag.size();
  if (open >= text.size() || text[open] != '{') return false;
  const std::size_t close = text.find('}', open);
  if (close == std::string_view::npos) return false;
  name = std::string(text.substr(open + 1, close - open - 1));
  pos = close + 1;
  return true;
}

bool control_word_at(std::string_view text, std::size_t pos, std::string_view word) {
  if (!matches_at(text, pos, word)) return false;
  const std::size_t after = pos + word.size();
  return after >= text.size() || !is_ascii_letter(text[after]);
}

bool is_figure_environment(std::string_view name) {
  return name == "figure" || name == "figure*" || name == "wrapfigure";
}

struct InnerScan {
  std::string caption_raw;
  bool found_outer_caption = false;
  std::vector<std::string> labels;
  std::vector<std::string> outer_labels;
};

InnerScan scan_inner(std::string_view inner) {
  InnerScan scan;
  std::string first_nested_caption;
  bool found_nested_caption = false;
  int depth = 0;
  std::size_t i = 0;
  while (i < inner.size()) {
    if (inner[i] != '\\') {
      ++i;
      continue;
    }
    std::string env;
    std::size_t cur = i;
    if (read_env_tag(inner, cur, "\\begin", env)) {
      ++depth;
      i = cur;
      continue;
    }
    if (read_env_tag(inner, cur, "\\end", env)) {
      depth = std::max(0, depth - 1);
      i = cur;
      continue;
    }
    if (control_word_at(inner, i, "\\caption")) {
      std::size_t arg = skip_optional_args(inner, i + 8);
      arg = skip_spaces(inner, arg);
      if (arg < inner.size() && inner[arg] == '{') {
        const std::size_t close = find_matching_brace(inner, arg);
        if (close != std::string_view::npos) {
          std::string text(inner.substr(arg + 1, close - arg - 1));
          if (depth == 0 && !scan.found_outer_caption) {
            scan.caption_raw = std::move(text);
            scan.found_outer_caption = true;
          } else if (depth > 0 && !found_nested_caption) {
            first_nested_caption = std::move(text);
            found_nested_caption = true;
          }
          // Labels nested in the caption argument are still seen below.
          i = arg + 1;
          continue;
        }
      }
    }
    if (control_word_at(inner, i, "\\label")) {
      std::size_t arg = skip_spaces(inner, i + 6);
      if (arg < inner.size() && inner[arg] == '{') {
        const std::size_t close = find_matching_brace(inner, arg);
        if (close != std::string_view::npos) {
          std::string label = trim(inner.substr(arg + 1, close - arg - 1));
          if (!label.empty()) {
            if (depth == 0) scan.outer_labels.push_back(label);
            scan.labels.push_back(std::move(label));
          }
          i = close + 1;
          continue;
        }
      }
    }
    i += 2;
  }
  if (!scan.found_outer_caption && found_nested_caption) scan.caption_raw = std::move(first_nested_caption);
  return scan;
}

bool cites_any(std::string_view paragraph, const std::set<std::string, std::less<>>& labels,
               const std::vector<std::string>& commands) {
  std::size_t i = 0;
  while ((i = paragraph.find('\\', i)) != std::string_view::npos) {
    std::size_t end = i + 1;
    while (end < paragraph.size() && is_ascii_letter(paragraph[end])) ++end;
    const std::string_view name = paragraph.substr(i + 1, end - i - 1);
    if (name.empty()) {
      i += 2;
      continue;
    }
    if (std::find(commands.begin(), commands.end(), name) == commands.end()) {
      i = end;
      continue;
    }
    std::size_t cur = end;
    if (cur < paragraph.size() && paragraph[cur] == '*') ++cur;
    cur = skip_spaces(paragraph, cur);
    if (cur >= paragraph.size() || paragraph[cur] != '{') {
      i = end;
      continue;
    }
    const std::size_t close = find_matching_brace(paragraph, cur);
    if (close == std::string_view::npos) {
      i = end;
      continue;
    }
    for (const std::string& key : split(paragraph.substr(cur + 1, close - cur - 1), ",")) {
      if (labels.count(trim_view(key))) return true;
    }
    i = close + 1;
  }
  return false;
}

bool defines_any(std::string_view paragraph, const std::set<std::string, std::less<>>& labels) {
  for (const std::string& label : labels) {
    if (paragraph.find("\\label{" + label + "}") != std::string_view::npos) return true;
  }
  return false;
}

std::string format_ratio(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", value);
  return buf;
}

}  // namespace

std::string_view to_string(DiscardKind kind) {
  switch (kind) {
    case DiscardKind::kEmptyCaption: return "EmptyCaption";
    case DiscardKind::kNoEnvironmentMatch: return "NoEnvironmentMatch";
    case DiscardKind::kAmbiguousMatch: return "AmbiguousMatch";
    case DiscardKind::kNoLabel: return "NoLabel";
    case DiscardKind::kNoCitingParagraph: return "NoCitingParagraph";
  }
  return "Unknown";
}

DiscardKind discard_kind_from_string(std::string_view name) {
  for (DiscardKind kind : {DiscardKind::kEmptyCaption, DiscardKind::kNoEnvironmentMatch, DiscardKind::kAmbiguousMatch,
                           DiscardKind::kNoLabel, DiscardKind::kNoCitingParagraph}) {
    if (to_string(kind) == name) return kind;
  }
  throw std::invalid_argument("unknown discard kind: " + std::string(name));
}

std::string normalize_caption(std::string_view caption_latex) {
  std::string out;
  out.reserve(caption_latex.size());
  append_plain_text(caption_latex, out);
  return collapse_whitespace(out);
}

std::size_t levenshtein_distance(std::u32string_view a, std::u32string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> prev(b.size() + 1);
  std::vector<std::size_t> cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t substitution = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, substitution});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double levenshtein_similarity(std::string_view a, std::string_view b) {
  const std::u32string ua = utf8_decode(a);
  const std::u32string ub = utf8_decode(b);
  const std::size_t longest = std::max(ua.size(), ub.size());
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(levenshtein_distance(ua, ub)) / static_cast<double>(longest);
}

std::string caption_match_key(std::string_view caption) {
  return ascii_lower(collapse_whitespace(normalize_caption(caption)));
}

std::vector<FigureEnvironment> find_figure_environments(std::string_view body) {
  std::vector<FigureEnvironment> environments;
  std::size_t i = 0;
  while ((i = body.find("\\begin{", i)) != std::string_view::npos) {
    std::string name;
    std::size_t content_begin = i;
    if (!read_env_tag(body, content_begin, "\\begin", name) || !is_figure_environment(name)) {
      i += 7;
      continue;
    }
    // Find the matching \end{name}, allowing the same environment to nest.
    const std::string begin_tag = "\\begin{" + name + "}";
    const std::string end_tag = "\\end{" + name + "}";
    int depth = 1;
    std::size_t cur = content_begin;
    std::size_t content_end = std::string_view::npos;
    while (depth > 0) {
      const std::size_t next_begin = body.find(begin_tag, cur);
      const std::size_t next_end = body.find(end_tag, cur);
      if (next_end == std::string_view::npos) break;
      if (next_begin != std::string_view::npos && next_begin < next_end) {
        ++depth;
        cur = next_begin + begin_tag.size();
      } else {
        --depth;
        cur = next_end + end_tag.size();
        if (depth == 0) content_end = next_end;
      }
    }
    if (content_end == std::string_view::npos) {
      i = content_begin;
      continue;
    }
    InnerScan scan = scan_inner(body.substr(content_begin, content_end - content_begin));
    FigureEnvironment env;
    env.begin = i;
    env.end = content_end + end_tag.size();
    env.caption_raw = std::move(scan.caption_raw);
    env.caption_normalized = normalize_caption(env.caption_raw);
    env.labels = std::move(scan.labels);
    env.outer_labels = std::move(scan.outer_labels);
    environments.push_back(std::move(env));
    i = environments.back().end;
  }
  return environments;
}

std::vector<std::string> extract_figure_labels(const FigureEnvironment& env) { return env.labels; }

std::variant<std::size_t, DiscardReason> match_caption_to_environment(
    std::string_view corpus_caption, const std::vector<FigureEnvironment>& environments, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw std::invalid_argument("threshold must lie in (0, 1]");
  const std::string key = caption_match_key(corpus_caption);
  std::vector<std::size_t> qualifying;
  double best = 0.0;
  for (std::size_t k = 0; k < environments.size(); ++k) {
    const double sim = levenshtein_similarity(key, caption_match_key(environments[k].caption_normalized));
    best = std::max(best, sim);
    if (sim >= threshold) qualifying.push_back(k);
  }
  if (qualifying.empty()) {
    return DiscardReason{DiscardKind::kNoEnvironmentMatch,
                         "best similarity " + format_ratio(best) + " over " + std::to_string(environments.size()) +
                             " environments"};
  }
  if (qualifying.size() > 1) {
    return DiscardReason{DiscardKind::kAmbiguousMatch,
                         std::to_string(qualifying.size()) + " environments reach the threshold"};
  }
  return qualifying.front();
}

std::vector<std::string> find_citing_paragraphs(std::string_view label, const std::vector<std::string>& paragraphs,
                                                const std::vector<std::string>& commands) {
  return find_citing_paragraphs(std::vector<std::string>{std::string(label)}, paragraphs, commands);
}

std::vector<std::string> find_citing_paragraphs(const std::vector<std::string>& labels,
                                                const std::vector<std::string>& paragraphs,
                                                const std::vector<std::string>& commands) {
  const std::set<std::string, std::less<>> keys(labels.begin(), labels.end());
  std::vector<std::string> citing;
  if (keys.empty()) return citing;
  for (const std::string& paragraph : paragraphs) {
    if (defines_any(paragraph, keys)) continue;
    if (cites_any(paragraph, keys, commands)) citing.push_back(paragraph);
  }
  return citing;
}

ExtractionResult build_figure_contexts(const RawPaper& raw, const CleanPaper& clean, const ExtractionOptions& options) {
  const std::vector<FigureEnvironment> environments = find_figure_environments(clean.body);
  ExtractionResult result;

  struct Pending {
    const FigureCaptionPair* pair;
    std::variant<std::size_t, DiscardReason> match;
  };
  std::vector<Pending> pending;
  std::map<std::size_t, int> env_use;
  for (const FigureCaptionPair& pair : raw.figures) {
    if (caption_match_key(pair.caption).empty()) {
      pending.push_back({&pair, DiscardReason{DiscardKind::kEmptyCaption, "corpus caption is empty"}});
      continue;
    }
    auto match = match_caption_to_environment(pair.caption, environments, options.threshold);
    if (const auto* index = std::get_if<std::size_t>(&match)) ++env_use[*index];
    pending.push_back({&pair, std::move(match)});
  }

  for (Pending& item : pending) {
    const FigureCaptionPair& pair = *item.pair;
    auto discard = [&](DiscardReason reason) {
      result.discards.push_back({raw.arxiv_id, pair.figure_index, std::move(reason)});
    };
    if (auto* reason = std::get_if<DiscardReason>(&item.match)) {
      discard(std::move(*reason));
      continue;
    }
    const std::size_t env_index = std::get<std::size_t>(item.match);
    if (env_use[env_index] > 1) {
      discard({DiscardKind::kAmbiguousMatch,
               "environment " + std::to_string(env_index) + " matched by " + std::to_string(env_use[env_index]) +
                   " figures"});
      continue;
    }
    const FigureEnvironment& env = environments[env_index];
    const std::vector<std::string> labels = extract_figure_labels(env);
    if (labels.empty()) {
      discard({DiscardKind::kNoLabel, "matched environment has no \\label"});
      continue;
    }
    const std::string& key = env.outer_labels.empty() ? labels.front() : env.outer_labels.front();
    const std::vector<std::string> citing = find_citing_paragraphs(labels, clean.paragraphs, options.citation_commands);
    if (citing.empty()) {
      discard({DiscardKind::kNoCitingParagraph, "label '" + key + "' is never cited"});
      continue;
    }
    FigureContext ctx;
    ctx.arxiv_id = raw.arxiv_id;
    ctx.primary_category = raw.primary_category;
    ctx.figure_index = pair.figure_index;
    ctx.image_ref = pair.image_ref;
    ctx.caption = pair.caption;
    ctx.latex_caption = env.caption_raw;
    ctx.label = key;
    ctx.citing_paragraph_count = static_cast<int>(citing.size());
    for (std::size_t k = 0; k < citing.size(); ++k) {
      if (k > 0) ctx.context += options.paragraph_separator;
      ctx.context += citing[k];
    }
    result.contexts.push_back(std::move(ctx));
  }
  return result;
}

}  // namespace figqa
