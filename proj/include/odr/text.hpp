#pragma once

#include <cstddef>
#include <string>
#include <string_view>

// UTF-8 helpers shared by detection and prompting. Offsets reported to
// callers are code-point offsets, never byte offsets.
namespace odr::text {

/// Invalid sequences decode to U+FFFD, one per offending byte.
std::u32string decode_utf8(std::string_view bytes);
std::string encode_utf8(std::u32string_view cps);

/// Simple one-to-one case folding; never changes the code-point count.
char32_t fold_case(char32_t c) noexcept;
std::u32string fold_case(std::u32string_view cps);

bool is_alnum(char32_t c) noexcept;

std::string trim(std::string_view s);
bool is_blank(std::string_view s);

/// Number of whitespace-separated words.
std::size_t count_words(std::string_view s);

std::string to_lower_ascii(std::string_view s);

} // namespace odr::text
