#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace leakaudit {

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);

/// Shortest decimal representation that parses back to the same double.
std::string format_shortest(double v);

/// Strict full-string decimal parse (no trailing garbage, no inf/nan).
bool parse_double(std::string_view s, double& out);

/// Case-insensitive glob match supporting '*' and '?'.
bool glob_match(std::string_view pattern, std::string_view text);

std::vector<std::string> split(std::string_view s, char sep);

}  // namespace leakaudit
