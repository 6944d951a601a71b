#pragma once

#include <string>
#include <string_view>

namespace jointud::utf8 {

// Code point sequence of a UTF-8 string. Invalid bytes decode to U+FFFD.
std::u32string decode(std::string_view text);
std::string encode(std::u32string_view text);
std::string encode(char32_t cp);

// Simple (length-preserving) case mappings.
char32_t to_lower(char32_t cp);
char32_t to_upper(char32_t cp);
std::u32string to_lower(std::u32string_view text);
std::u32string to_upper(std::u32string_view text);
std::string to_lower(std::string_view text);

// True for the Unicode general category Zs.
bool is_space_separator(char32_t cp);

}  // namespace jointud::utf8
