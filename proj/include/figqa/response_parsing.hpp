#pragma once

#include <string>
#include <string_view>
#include <optional>
#include <variant>
#include <vector>

namespace figqa {

/// The model declined ("None").
struct NoneSignal {
  bool operator==(const NoneSignal&) const = default;
};

/// Claims inside the first <Patterns>...</Patterns> block, one per line.
/// Throws MalformedResponse when there is no block and the reply is not "None".
std::variant<std::vector<std::string>, NoneSignal> parse_patterns_block(std::string_view response);

struct OptionSelection {
  enum class Kind { kLetter, kNone, kAmbiguous };
  Kind kind = Kind::kAmbiguous;
  char letter = 0;

  static OptionSelection of(char l) { return {Kind::kLetter, l}; }
  static OptionSelection none() { return {Kind::kNone, 0}; }
  static OptionSelection ambiguous() { return {Kind::kAmbiguous, 0}; }

  bool is_letter() const { return kind == Kind::kLetter; }
  bool operator==(const OptionSelection&) const = default;

  /// "A".."Z", "None" or "Ambiguous".
  std::string to_string() const;
  static OptionSelection from_string(std::string_view text);
};

/// Letter inside <option>...</option>. Throws MalformedResponse when the
/// response has no option tag; callers treat that as ambiguous.
OptionSelection parse_option_tag(std::string_view response, int option_count);

/// Same, but a missing tag yields Ambiguous instead of throwing.
OptionSelection parse_option_tag_or_ambiguous(std::string_view response, int option_count);

/// Content of the first <tag>...</tag> pair (case-insensitive tag name), if any.
std::optional<std::string> extract_tag(std::string_view response, std::string_view tag);

/// True when a reply, stripped of whitespace and a trailing period, is "None".
bool is_none_reply(std::string_view text);

}  // namespace figqa
