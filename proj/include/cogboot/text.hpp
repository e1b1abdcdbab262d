#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace cogboot::text {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

/// Trim, case-fold and collapse runs of whitespace into one space.
std::string canonicalize(std::string_view s);

/// Trim and collapse whitespace runs, preserving case.
std::string canonicalize_spaces(std::string_view s);

bool iequals(std::string_view a, std::string_view b);
bool starts_with_ci(std::string_view s, std::string_view prefix);

std::vector<std::string> split(std::string_view s, char sep);
std::vector<std::string> split_lines(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// Glob match where '*' matches any (possibly empty) run; case-insensitive.
bool glob_match(std::string_view pattern, std::string_view value);

/// Number of UTF-8 code points.
std::size_t codepoint_count(std::string_view s);

/// Replace every occurrence of `from` with `to`.
std::string replace_all(std::string s, std::string_view from, std::string_view to);

std::string format_fixed(double value, int decimals);

}  // namespace cogboot::text
