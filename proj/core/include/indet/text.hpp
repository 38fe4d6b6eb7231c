#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace indet {

/// Canonical expression text: trimmed, internal whitespace collapsed to
/// single spaces, case preserved.
std::string normalize_text(std::string_view s);

/// ASCII lower-casing, used for dedup keys only (stored text keeps case).
std::string casefold(std::string_view s);

/// Drops one leading "a "/"an "/"the " (case-insensitive) if present.
std::string_view strip_leading_article(std::string_view s);

std::vector<std::string> split_ws(std::string_view s);
std::size_t word_count(std::string_view s);

/// Splits on a delimiter, trimming each piece and dropping empties.
std::vector<std::string> split_trimmed(std::string_view s, char delim);

bool starts_with_ci(std::string_view s, std::string_view prefix);
bool contains_ci(std::string_view haystack, std::string_view needle);

/// FNV-1a, the stable hash used for mock keying and seed derivation.
std::uint64_t fnv1a64(std::string_view s);

}  // namespace indet
