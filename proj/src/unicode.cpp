#include "chandas/unicode.hpp"

#include <unicode/errorcode.h>
#include <unicode/normalizer2.h>
#include <unicode/unistr.h>

#include "chandas/error.hpp"

namespace chandas {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnsupportedCodepoint: return "UnsupportedCodepoint";
    case ErrorCode::MalformedCluster: return "MalformedCluster";
    case ErrorCode::WrongArity: return "WrongArity";
    case ErrorCode::TooLong: return "TooLong";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::UnknownId: return "UnknownId";
    case ErrorCode::ProtocolError: return "ProtocolError";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

namespace unicode {

std::u32string decode(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    char32_t cp = 0;
    std::size_t len = 0;
    if (b0 < 0x80) {
      cp = b0;
      len = 1;
    } else if ((b0 & 0xE0) == 0xC0) {
      cp = b0 & 0x1F;
      len = 2;
    } else if ((b0 & 0xF0) == 0xE0) {
      cp = b0 & 0x0F;
      len = 3;
    } else if ((b0 & 0xF8) == 0xF0) {
      cp = b0 & 0x07;
      len = 4;
    } else {
      throw Error(ErrorCode::UnsupportedCodepoint, "invalid UTF-8 lead byte", i);
    }
    if (i + len > s.size()) {
      throw Error(ErrorCode::UnsupportedCodepoint, "truncated UTF-8 sequence", i);
    }
    for (std::size_t j = 1; j < len; ++j) {
      const auto b = static_cast<unsigned char>(s[i + j]);
      if ((b & 0xC0) != 0x80) {
        throw Error(ErrorCode::UnsupportedCodepoint, "invalid UTF-8 continuation byte", i);
      }
      cp = (cp << 6) | (b & 0x3F);
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

void append(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::string encode(std::u32string_view cps) {
  std::string out;
  out.reserve(cps.size() * 3);
  for (char32_t cp : cps) append(out, cp);
  return out;
}

std::string nfc(std::string_view utf8) {
  icu::ErrorCode status;
  const icu::Normalizer2* normalizer = icu::Normalizer2::getNFCInstance(status);
  if (status.isFailure()) {
    throw Error(ErrorCode::IoError, std::string("ICU NFC unavailable: ") + status.errorName());
  }
  const auto source = icu::UnicodeString::fromUTF8(
      icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
  if (normalizer->isNormalized(source, status) && status.isSuccess()) {
    return std::string(utf8);
  }
  status.reset();
  icu::UnicodeString normalized = normalizer->normalize(source, status);
  if (status.isFailure()) {
    throw Error(ErrorCode::UnsupportedCodepoint, std::string("NFC failed: ") + status.errorName());
  }
  std::string out;
  normalized.toUTF8String(out);
  return out;
}

std::string_view strip_bom(std::string_view utf8) {
  if (utf8.size() >= 3 && static_cast<unsigned char>(utf8[0]) == 0xEF &&
      static_cast<unsigned char>(utf8[1]) == 0xBB && static_cast<unsigned char>(utf8[2]) == 0xBF) {
    utf8.remove_prefix(3);
  }
  return utf8;
}

}  // namespace unicode
}  // namespace chandas
