#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace finforge {

// Strict UTF-8 decode. Throws DataError with the byte offset on invalid input.
std::vector<char32_t> decode_utf8(std::string_view text);

std::string encode_utf8(const std::vector<char32_t>& cps);
void append_utf8(std::string& out, char32_t cp);

// Number of codepoints; throws on invalid UTF-8.
std::size_t codepoint_count(std::string_view text);

bool is_valid_utf8(std::string_view text);

inline bool is_ascii_alnum(char32_t cp) {
    return (cp >= U'0' && cp <= U'9') || (cp >= U'A' && cp <= U'Z') ||
           (cp >= U'a' && cp <= U'z');
}

// CJK unified ideographs plus extension A.
inline bool is_cjk(char32_t cp) {
    return (cp >= 0x4E00 && cp <= 0x9FFF) || (cp >= 0x3400 && cp <= 0x4DBF);
}

inline bool is_unicode_space(char32_t cp) {
    return cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r' ||
           cp == 0x3000 || cp == 0x00A0;
}

// Maps fullwidth forms (U+FF01..FF5E) and the ideographic space to their
// ASCII counterparts; returns the input codepoint otherwise.
inline char32_t fullwidth_to_ascii(char32_t cp) {
    if (cp >= 0xFF01 && cp <= 0xFF5E) return cp - 0xFF01 + U'!';
    if (cp == 0x3000) return U' ';
    return cp;
}

std::string trim(std::string_view s);

// Collapses internal runs of whitespace to single spaces and trims; the
// normalization used before preference-pair equality checks.
std::string collapse_whitespace(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);

bool starts_with(std::string_view s, std::string_view prefix);
bool ends_with(std::string_view s, std::string_view suffix);

}  // namespace finforge
