#pragma once

#include <string>
#include <string_view>

namespace bnrl {

/// Decodes UTF-8 into Unicode scalar values. Invalid bytes decode to U+FFFD.
std::u32string decode_utf8(std::string_view text);

/// Levenshtein distance over Unicode scalar values, case-sensitive.
int edit_distance(std::u32string_view a, std::u32string_view b);
int edit_distance(std::string_view a, std::string_view b);

}  // namespace bnrl
