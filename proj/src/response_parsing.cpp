#include "figqa/response_parsing.hpp"

#include <cctype>

#include "figqa/errors.hpp"
#include "figqa/text_util.hpp"

namespace figqa {
namespace {

std::size_t find_icase(std::string_view haystack, std::string_view needle, std::size_t from = 0) {
  const std::string lower = ascii_lower(haystack);
  return lower.find(ascii_lower(needle), from);
}

std::string strip_list_marker(std::string_view line) {
  std::string_view view = trim_view(line);
  if (view.starts_with("- ") || view.starts_with("* ") || view.starts_with("• ")) {
    view.remove_prefix(view.starts_with("• ") ? 4 : 2);
    return trim(view);
  }
  std::size_t digits = 0;
  while (digits < view.size() && std::isdigit(static_cast<unsigned char>(view[digits]))) ++digits;
  if (digits > 0 && digits + 1 < view.size() && (view[digits] == '.' || view[digits] == ')') &&
      view[digits + 1] == ' ') {
    return trim(view.substr(digits + 2));
  }
  return std::string(view);
}

bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

std::string strip_punct_and_space(std::string_view text) {
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && (is_ascii_space(text[begin]) || is_punct(text[begin]))) ++begin;
  while (end > begin && (is_ascii_space(text[end - 1]) || is_punct(text[end - 1]))) --end;
  return std::string(text.substr(begin, end - begin));
}

OptionSelection classify_option_content(std::string_view content, int option_count) {
  const std::string core = strip_punct_and_space(content);
  if (ascii_lower(core) == "none") return OptionSelection::none();
  char letter = 0;
  if (core.size() == 1 && is_ascii_letter(core[0])) {
    letter = core[0];
  } else {
    // "C. option text" / "C) option text": the letter leads, then a separator.
    const std::string_view view = trim_view(content);
    const std::size_t lead = view.starts_with("(") ? 1 : 0;
    if (view.size() > lead + 2 && is_ascii_letter(view[lead]) &&
        (view[lead + 1] == '.' || view[lead + 1] == ')' || view[lead + 1] == ':') && view[lead + 2] == ' ') {
      letter = view[lead];
    }
  }
  if (letter == 0) return OptionSelection::ambiguous();
  letter = static_cast<char>(std::toupper(static_cast<unsigned char>(letter)));
  if (letter < 'A' || letter >= 'A' + option_count) return OptionSelection::ambiguous();
  return OptionSelection::of(letter);
}

}  // namespace

bool is_none_reply(std::string_view text) {
  std::string_view view = trim_view(text);
  if (view.ends_with(".")) view.remove_suffix(1);
  return ascii_lower(trim_view(view)) == "none";
}

std::optional<std::string> extract_tag(std::string_view response, std::string_view tag) {
  const std::string open = "<" + std::string(tag) + ">";
  const std::string close = "</" + std::string(tag) + ">";
  const std::size_t begin = find_icase(response, open);
  if (begin == std::string::npos) return std::nullopt;
  const std::size_t content = begin + open.size();
  const std::size_t end = find_icase(response, close, content);
  if (end == std::string::npos) return std::nullopt;
  return std::string(response.substr(content, end - content));
}

std::variant<std::vector<std::string>, NoneSignal> parse_patterns_block(std::string_view response) {
  const auto block = extract_tag(response, "Patterns");
  if (!block) {
    if (is_none_reply(response)) return NoneSignal{};
    throw MalformedResponse("response has no <Patterns> block");
  }
  if (trim_view(*block).empty() || is_none_reply(*block)) return NoneSignal{};
  std::vector<std::string> claims;
  for (const std::string& line : split(*block, "\n")) {
    std::string claim = strip_list_marker(line);
    if (!claim.empty()) claims.push_back(std::move(claim));
  }
  if (claims.empty()) return NoneSignal{};
  return claims;
}

std::string OptionSelection::to_string() const {
  switch (kind) {
    case Kind::kLetter: return std::string(1, letter);
    case Kind::kNone: return "None";
    case Kind::kAmbiguous: return "Ambiguous";
  }
  return "Ambiguous";
}

OptionSelection OptionSelection::from_string(std::string_view text) {
  if (text == "None") return none();
  if (text.size() == 1 && text[0] >= 'A' && text[0] <= 'Z') return of(text[0]);
  return ambiguous();
}

OptionSelection parse_option_tag(std::string_view response, int option_count) {
  if (option_count < 2 || option_count > 26) throw std::invalid_argument("option_count must be in 2..26");
  static constexpr std::string_view kOpen = "<option>";
  static constexpr std::string_view kClose = "</option>";
  const std::string lower = ascii_lower(response);
  std::optional<OptionSelection> chosen;
  std::size_t pos = 0;
  bool any = false;
  while ((pos = lower.find(kOpen, pos)) != std::string::npos) {
    const std::size_t content = pos + kOpen.size();
    const std::size_t end = lower.find(kClose, content);
    if (end == std::string::npos) break;
    any = true;
    const OptionSelection sel = classify_option_content(response.substr(content, end - content), option_count);
    if (!chosen) {
      chosen = sel;
    } else if (!(*chosen == sel)) {
      return OptionSelection::ambiguous();
    }
    pos = end + kClose.size();
  }
  if (!any) throw MalformedResponse("response has no <option> tag");
  return *chosen;
}

OptionSelection parse_option_tag_or_ambiguous(std::string_view response, int option_count) {
  try {
    return parse_option_tag(response, option_count);
  } catch (const MalformedResponse&) {
    return OptionSelection::ambiguous();
  }
}

}  // namespace figqa
