#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace chandas::unicode {

// Decodes UTF-8 into codepoints. Invalid sequences raise Error(UnsupportedCodepoint)
// with the byte offset of the bad sequence.
std::u32string decode(std::string_view utf8);

std::string encode(std::u32string_view cps);
void append(std::string& out, char32_t cp);

// NFC normalization (backed by ICU).
std::string nfc(std::string_view utf8);

// Removes a leading UTF-8 byte order mark, if present.
std::string_view strip_bom(std::string_view utf8);

}  // namespace chandas::unicode
