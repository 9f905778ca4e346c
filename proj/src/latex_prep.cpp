#include "figqa/latex_prep.hpp"

#include <array>
#include <map>
#include <optional>

#include "figqa/errors.hpp"
#include "figqa/text_util.hpp"

namespace figqa {
namespace {

constexpr std::array<std::string_view, 5> kVerbatimEnvironments = {
    "verbatim", "verbatim*", "lstlisting", "Verbatim", "minted"};

bool matches_at(std::string_view text, std::size_t pos, std::string_view token) {
  return text.compare(pos, token.size(), token) == 0;
}

// True when the control word starting at `pos` (pointing at the backslash) is
// exactly `word`, i.e. not a prefix of a longer control word.
bool control_word_at(std::string_view text, std::size_t pos, std::string_view word) {
  if (!matches_at(text, pos, word)) return false;
  const std::size_t after = pos + word.size();
  return after >= text.size() || !is_ascii_letter(text[after]);
}

// Name of a verbatim-like environment opened at `pos`, if any.
std::optional<std::string_view> verbatim_begin_at(std::string_view text, std::size_t pos) {
  static constexpr std::string_view kBegin = "\\begin{";
  if (!matches_at(text, pos, kBegin)) return std::nullopt;
  for (std::string_view env : kVerbatimEnvironments) {
    const std::size_t name_pos = pos + kBegin.size();
    if (matches_at(text, name_pos, env) && name_pos + env.size() < text.size() &&
        text[name_pos + env.size()] == '}') {
      return env;
    }
  }
  return std::nullopt;
}

std::size_t end_of_environment(std::string_view text, std::size_t from, std::string_view env) {
  const std::string end_tag = "\\end{" + std::string(env) + "}";
  const std::size_t pos = text.find(end_tag, from);
  return pos == std::string_view::npos ? text.size() : pos + end_tag.size();
}

bool output_line_is_blank(const std::string& out) {
  for (auto it = out.rbegin(); it != out.rend(); ++it) {
    if (*it == '\n') return true;
    if (!is_ascii_space(*it)) return false;
  }
  return true;
}

void drop_trailing_line_whitespace(std::string& out) {
  while (!out.empty() && out.back() != '\n' && is_ascii_space(out.back())) out.pop_back();
}

struct MacroDefinition {
  int arg_count = 0;
  std::optional<std::string> default_first;
  std::string body;
};

std::size_t skip_spaces(std::string_view text, std::size_t pos) {
  while (pos < text.size() && is_ascii_space(text[pos])) ++pos;
  return pos;
}

// Reads "\name" starting at pos; returns the name without the backslash.
std::optional<std::string> read_control_word(std::string_view text, std::size_t& pos) {
  if (pos >= text.size() || text[pos] != '\\') return std::nullopt;
  std::size_t end = pos + 1;
  while (end < text.size() && is_ascii_letter(text[end])) ++end;
  if (end == pos + 1) return std::nullopt;
  std::string name(text.substr(pos + 1, end - pos - 1));
  pos = end;
  return name;
}

std::optional<std::string> read_braced(std::string_view text, std::size_t& pos) {
  if (pos >= text.size() || text[pos] != '{') return std::nullopt;
  const std::size_t close = find_matching_brace(text, pos);
  if (close == std::string_view::npos) return std::nullopt;
  std::string content(text.substr(pos + 1, close - pos - 1));
  pos = close + 1;
  return content;
}

std::optional<std::string> read_bracketed(std::string_view text, std::size_t& pos) {
  if (pos >= text.size() || text[pos] != '[') return std::nullopt;
  int depth = 0;
  for (std::size_t i = pos; i < text.size(); ++i) {
    if (text[i] == '{') ++depth;
    if (text[i] == '}') --depth;
    if (text[i] == ']' && depth == 0) {
      std::string content(text.substr(pos + 1, i - pos - 1));
      pos = i + 1;
      return content;
    }
  }
  return std::nullopt;
}

// Parses \newcommand-family syntax after the command word. On success,
// registers the macro and advances pos past the definition.
bool parse_newcommand(std::string_view text, std::size_t& pos,
                      std::map<std::string, MacroDefinition>& macros) {
  std::size_t cur = pos;
  if (cur < text.size() && text[cur] == '*') ++cur;
  cur = skip_spaces(text, cur);
  std::optional<std::string> name;
  if (cur < text.size() && text[cur] == '{') {
    std::size_t inner = skip_spaces(text, cur + 1);
    name = read_control_word(text, inner);
    inner = skip_spaces(text, inner);
    if (!name || inner >= text.size() || text[inner] != '}') return false;
    cur = inner + 1;
  } else {
    name = read_control_word(text, cur);
    if (!name) return false;
  }
  MacroDefinition def;
  cur = skip_spaces(text, cur);
  if (auto count = read_bracketed(text, cur)) {
    const std::string digits = trim(*count);
    if (digits.size() != 1 || digits[0] < '0' || digits[0] > '9') return false;
    def.arg_count = digits[0] - '0';
    cur = skip_spaces(text, cur);
    if (auto fallback = read_bracketed(text, cur)) {
      def.default_first = std::move(*fallback);
      cur = skip_spaces(text, cur);
    }
  }
  auto body = read_braced(text, cur);
  if (!body) return false;
  def.body = std::move(*body);
  macros[*name] = std::move(def);
  pos = cur;
  return true;
}

// Parses "\def\name#1#2{body}" after the \def word.
bool parse_def(std::string_view text, std::size_t& pos, std::map<std::string, MacroDefinition>& macros) {
  std::size_t cur = skip_spaces(text, pos);
  auto name = read_control_word(text, cur);
  if (!name) return false;
  MacroDefinition def;
  while (cur < text.size() && text[cur] != '{') {
    if (text[cur] == '#' && cur + 1 < text.size() && text[cur + 1] == '1' + def.arg_count) {
      ++def.arg_count;
      cur += 2;
      continue;
    }
    return false;  // delimited parameter text is not supported
  }
  auto body = read_braced(text, cur);
  if (!body) return false;
  def.body = std::move(*body);
  macros[*name] = std::move(def);
  pos = cur;
  return true;
}

std::string collect_definitions(std::string_view text, std::map<std::string, MacroDefinition>& macros) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] != '\\') {
      out.push_back(text[i++]);
      continue;
    }
    std::size_t cur = i;
    bool consumed = false;
    for (std::string_view word : {"\\newcommand", "\\renewcommand", "\\providecommand"}) {
      if (control_word_at(text, i, word)) {
        cur = i + word.size();
        consumed = parse_newcommand(text, cur, macros);
        break;
      }
    }
    if (!consumed && control_word_at(text, i, "\\def")) {
      cur = i + 4;
      consumed = parse_def(text, cur, macros);
    }
    if (consumed) {
      i = cur;
      continue;
    }
    // Copy the backslash with its escaped character so "\\" never starts a word.
    out.push_back(text[i++]);
    if (i < text.size() && !is_ascii_letter(text[i])) out.push_back(text[i++]);
  }
  return out;
}

std::optional<std::string> read_argument(std::string_view text, std::size_t& pos) {
  std::size_t cur = skip_spaces(text, pos);
  if (cur >= text.size()) return std::nullopt;
  if (text[cur] == '{') {
    auto group = read_braced(text, cur);
    if (group) pos = cur;
    return group;
  }
  if (text[cur] == '\\') {
    std::size_t word_end = cur;
    if (read_control_word(text, word_end)) {
      pos = word_end;
      return std::string(text.substr(cur, word_end - cur));
    }
    if (cur + 1 < text.size()) {
      pos = cur + 2;
      return std::string(text.substr(cur, 2));
    }
    return std::nullopt;
  }
  pos = cur + 1;
  return std::string(1, text[cur]);
}

std::string substitute_parameters(const MacroDefinition& def, const std::vector<std::string>& args) {
  std::string out;
  out.reserve(def.body.size());
  for (std::size_t i = 0; i < def.body.size(); ++i) {
    const char c = def.body[i];
    if (c == '#' && i + 1 < def.body.size() && def.body[i + 1] >= '1' && def.body[i + 1] <= '9') {
      const std::size_t index = static_cast<std::size_t>(def.body[i + 1] - '1');
      if (index < args.size()) {
        out += args[index];
        ++i;
        continue;
      }
    }
    out.push_back(c);
  }
  return out;
}

// One left-to-right substitution pass. Substituted text is not rescanned
// within the same pass.
std::string expand_once(std::string_view text, const std::map<std::string, MacroDefinition>& macros,
                        bool& changed) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] != '\\') {
      out.push_back(text[i++]);
      continue;
    }
    std::size_t cur = i;
    auto name = read_control_word(text, cur);
    if (!name) {
      out.push_back(text[i++]);
      if (i < text.size()) out.push_back(text[i++]);
      continue;
    }
    const auto it = macros.find(*name);
    if (it == macros.end()) {
      out.append(text.substr(i, cur - i));
      i = cur;
      continue;
    }
    const MacroDefinition& def = it->second;
    std::vector<std::string> args;
    bool complete = true;
    for (int k = 0; k < def.arg_count; ++k) {
      if (k == 0 && def.default_first) {
        std::size_t probe = skip_spaces(text, cur);
        if (auto optional_arg = read_bracketed(text, probe)) {
          args.push_back(std::move(*optional_arg));
          cur = probe;
        } else {
          args.push_back(*def.default_first);
        }
        continue;
      }
      auto arg = read_argument(text, cur);
      if (!arg) {
        complete = false;
        break;
      }
      args.push_back(std::move(*arg));
    }
    if (!complete) {
      out.append(text.substr(i, cur - i));
      i = cur;
      continue;
    }
    out += substitute_parameters(def, args);
    changed = true;
    i = cur;
  }
  return out;
}

}  // namespace

std::string strip_comments(std::string_view latex) {
  std::string out;
  out.reserve(latex.size());
  std::size_t i = 0;
  while (i < latex.size()) {
    const char c = latex[i];
    if (c == '\\') {
      if (auto env = verbatim_begin_at(latex, i)) {
        const std::size_t end = end_of_environment(latex, i, *env);
        out.append(latex.substr(i, end - i));
        i = end;
        continue;
      }
      if (matches_at(latex, i, "\\begin{comment}")) {
        i = end_of_environment(latex, i, "comment");
        continue;
      }
      if (control_word_at(latex, i, "\\verb")) {
        std::size_t delim_pos = i + 5;
        if (delim_pos < latex.size() && latex[delim_pos] == '*') ++delim_pos;
        if (delim_pos < latex.size() && latex[delim_pos] != '\n') {
          const std::size_t close = latex.find(latex[delim_pos], delim_pos + 1);
          const std::size_t newline = latex.find('\n', delim_pos + 1);
          if (close != std::string_view::npos && close < newline) {
            out.append(latex.substr(i, close + 1 - i));
            i = close + 1;
            continue;
          }
        }
      }
      out.push_back(c);
      ++i;
      if (i < latex.size() && latex[i] != '\n') out.push_back(latex[i++]);
      continue;
    }
    if (c == '%') {
      std::size_t eol = latex.find('\n', i);
      if (eol == std::string_view::npos) eol = latex.size();
      if (output_line_is_blank(out) && eol < latex.size()) {
        drop_trailing_line_whitespace(out);
        i = eol + 1;
      } else {
        i = eol;
      }
      continue;
    }
    out.push_back(c);
    ++i;
  }
  return out;
}

std::string expand_macros(std::string_view latex, int max_depth) {
  std::map<std::string, MacroDefinition> macros;
  std::string text = collect_definitions(latex, macros);
  if (macros.empty()) return text;
  for (int pass = 0; pass < max_depth; ++pass) {
    bool changed = false;
    text = expand_once(text, macros, changed);
    if (!changed) return text;
  }
  bool changed = false;
  expand_once(text, macros, changed);
  if (changed) {
    throw RecursionLimitExceeded("macro expansion did not settle within " + std::to_string(max_depth) +
                                 " passes");
  }
  return text;
}

std::string strip_bibliography(std::string_view latex) {
  std::string out;
  out.reserve(latex.size());
  std::size_t i = 0;
  while (i < latex.size()) {
    if (latex[i] != '\\') {
      out.push_back(latex[i++]);
      continue;
    }
    if (matches_at(latex, i, "\\begin{thebibliography}")) {
      i = end_of_environment(latex, i, "thebibliography");
      continue;
    }
    if (control_word_at(latex, i, "\\bibliography")) {
      std::size_t cur = skip_spaces(latex, i + 13);
      if (read_braced(latex, cur)) {
        i = cur;
        continue;
      }
    }
    if (control_word_at(latex, i, "\\printbibliography")) {
      std::size_t cur = i + 18;
      std::size_t probe = cur;
      if (read_bracketed(latex, probe)) cur = probe;
      i = cur;
      continue;
    }
    out.push_back(latex[i++]);
    if (i < latex.size()) out.push_back(latex[i++]);
  }
  return out;
}

std::vector<std::string> segment_paragraphs(std::string_view body, std::string_view separator) {
  std::vector<std::string> paragraphs;
  for (const std::string& chunk : split(body, separator)) {
    std::string trimmed = trim(chunk);
    if (!trimmed.empty()) paragraphs.push_back(std::move(trimmed));
  }
  return paragraphs;
}

CleanPaper prepare_paper(const RawPaper& paper, const PrepOptions& options) {
  std::string text = strip_comments(paper.latex_source);
  text = expand_macros(text, options.macro_depth);
  text = strip_bibliography(text);

  std::string body;
  body.reserve(text.size());
  for (const std::string& line : split(text, "\n")) {
    std::string_view view = line;
    while (!view.empty() && is_ascii_space(view.back())) view.remove_suffix(1);
    body.append(view);
    body.push_back('\n');
  }
  body = trim(body);

  CleanPaper clean;
  clean.arxiv_id = paper.arxiv_id;
  clean.paragraphs = segment_paragraphs(body, options.paragraph_separator);
  clean.body = std::move(body);
  return clean;
}

}  // namespace figqa
