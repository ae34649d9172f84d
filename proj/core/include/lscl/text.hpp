#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lscl::text {

/// Splits UTF-8 text into tokens: runs of ASCII letters/digits (lower-cased)
/// and individual non-ASCII code points. Whitespace and ASCII punctuation
/// separate tokens and are dropped.
std::vector<std::string> tokenize(std::string_view utf8);

std::string trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);

/// Normalizes an answer key: trims whitespace and punctuation, upper-cases
/// ASCII, and maps true/false lexicon entries to "true"/"false".
std::string normalize_answer(std::string_view answer);

/// Maps yes/no/true/false words (English and Chinese) to "true"/"false".
std::optional<std::string> boolean_from_lexicon(std::string_view word);

}  // namespace lscl::text
