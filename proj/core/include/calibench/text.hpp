#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace calibench::text {

std::string trim(std::string_view s);

/// Collapses internal runs of whitespace to single spaces and trims the ends.
std::string collapse_spaces(std::string_view s);

std::string lowercase(std::string_view s);

/// Splits on a single-character delimiter; fields are not trimmed.
std::vector<std::string> split(std::string_view s, char delim);

/// Lowercased word tokens: maximal runs of alphanumeric characters.
std::vector<std::string> word_tokens(std::string_view s);

/// Jaccard similarity of the two strings' word-token sets. Both empty -> 1,
/// one empty -> 0.
double token_jaccard(std::string_view a, std::string_view b);

/// Number of distinct shared tokens between the two strings' token sets.
std::size_t shared_token_count(std::string_view a, std::string_view b);

std::size_t token_count(std::string_view s);

std::string replace_all(std::string s, std::string_view from, std::string_view to);

bool starts_with_ci(std::string_view s, std::string_view prefix);

uint64_t fnv1a64(std::string_view bytes);
uint64_t fnv1a64(std::string_view bytes, uint64_t seed);
std::string hex64(uint64_t v);

}  // namespace calibench::text
