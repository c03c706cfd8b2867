#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace srrg {

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);

// Splits on '\n' and drops a trailing '\r' from each line. A trailing newline
// does not produce an extra empty line.
std::vector<std::string_view> split_lines(std::string_view text);

bool starts_with_space(std::string_view s);

// True when `phrase` occurs in `haystack` with non-alphanumeric characters
// (or the string ends) on both sides. Both arguments must already be lowercase.
bool contains_phrase(std::string_view haystack, std::string_view phrase);

// Lowercase, fold Unicode en/em dashes to '-', collapse internal whitespace.
// Used for forgiving label lookups.
std::string normalize_label_key(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace srrg
