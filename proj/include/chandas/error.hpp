#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace chandas {

enum class ErrorCode {
  UnsupportedCodepoint,
  MalformedCluster,
  WrongArity,
  TooLong,
  EmptyCorpus,
  UnknownId,
  ProtocolError,
  Timeout,
  FormatError,
  InvalidArgument,
  IoError,
};

std::string_view to_string(ErrorCode code);

// All library failures are reported through this one exception type; callers
// switch on code() when they need to distinguish. `offset` carries a codepoint
// offset for script errors and a 1-based line number for format errors.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::size_t offset = npos)
      : std::runtime_error(message), code_(code), offset_(offset) {}

  ErrorCode code() const noexcept { return code_; }
  std::size_t offset() const noexcept { return offset_; }
  bool has_offset() const noexcept { return offset_ != npos; }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  ErrorCode code_;
  std::size_t offset_;
};

}  // namespace chandas
