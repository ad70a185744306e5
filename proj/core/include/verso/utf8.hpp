#pragma once

#include <cstdint>
#include <string>
#include <string_view>

// Minimal UTF-8 handling for the Latin-script text this toolkit ingests.
// Classification tables cover ASCII, Latin-1 Supplement and Latin Extended-A,
// which is all the Italian corpora need.
namespace verso::utf8 {

inline constexpr char32_t kReplacementChar = 0xFFFD;

// Decodes the sequence starting at s[i] and advances i past it.
// Malformed bytes decode as U+FFFD and advance by one byte.
char32_t decode(std::string_view s, std::size_t& i);

std::u32string decode_all(std::string_view s);

void encode(char32_t cp, std::string& out);
std::string encode_all(std::u32string_view cps);

char32_t to_lower(char32_t cp);

bool is_space(char32_t cp);
bool is_letter(char32_t cp);
bool is_digit(char32_t cp);

// Unicode punctuation (categories P*) over the Latin ranges plus the
// General Punctuation block. Symbols ($ + < = > ...) are not punctuation.
bool is_punct(char32_t cp);

}  // namespace verso::utf8
