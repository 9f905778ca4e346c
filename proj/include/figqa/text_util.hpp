#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace figqa {

/// Decodes UTF-8 into Unicode scalar values. Invalid bytes decode to U+FFFD.
std::u32string utf8_decode(std::string_view text);
std::string utf8_encode(std::u32string_view text);

std::string_view trim_view(std::string_view text);
std::string trim(std::string_view text);

/// Collapses every run of ASCII whitespace to one space and trims the ends.
std::string collapse_whitespace(std::string_view text);

std::string ascii_lower(std::string_view text);

bool starts_with_icase(std::string_view text, std::string_view prefix);

std::vector<std::string> split(std::string_view text, std::string_view separator);

void replace_all(std::string& text, std::string_view from, std::string_view to);

/// Index of the brace that closes the group opened at `open`, or npos.
/// Escaped braces (\{ and \}) are skipped.
std::size_t find_matching_brace(std::string_view text, std::size_t open);

bool is_ascii_letter(char c);
bool is_ascii_space(char c);

}  // namespace figqa
