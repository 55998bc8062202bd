#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace ff::text {

/// True for code points carrying the Unicode White_Space property.
bool is_unicode_space(char32_t cp) noexcept;

/// Decodes UTF-8 into code points. Throws ff::DataError on malformed input.
std::u32string decode_utf8(std::string_view s);

/// Number of maximal runs of non-whitespace code points.
std::size_t count_words(std::string_view utf8);

/// Number of Unicode scalar values.
std::size_t char_length(std::string_view utf8);

/// Splits on Unicode whitespace, dropping empty pieces.
std::vector<std::string> split_whitespace(std::string_view utf8);

}  // namespace ff::text
