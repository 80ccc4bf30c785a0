#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace casekg::text {

std::string trim(std::string_view s);

// Trim, collapse internal whitespace runs to one space, ASCII-lowercase.
std::string normalize(std::string_view s);

std::string to_lower(std::string_view s);

// Lowercased alphanumeric runs.
std::vector<std::string> tokens(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);

bool iequals(std::string_view a, std::string_view b);

// Position of needle in haystack ignoring ASCII case, or npos.
std::size_t ifind(std::string_view haystack, std::string_view needle, std::size_t from = 0);

// Lowercase hex SHA-256 of the input.
std::string sha256_hex(std::string_view data);

}  // namespace casekg::text
