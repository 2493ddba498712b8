// SPDX-License-Identifier: Apache-2.0
/**
 * @file   error.h
 * @brief  Typed error carried by every failing operation in the library.
 */
#ifndef XLING_ERROR_H_
#define XLING_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace xling {

enum class ErrorKind {
  kInvalidArgument,
  kDimensionMismatch,
  kFrameMismatch,
  kBadMagic,
  kTruncated,
  kNotStochastic,
  kDuplicateToken,
  kNoBlank,
  kDuplicateUtterance,
  kMissingFile,
  kUnknownLanguage,
  kCorruptCheckpoint,
  kParse,
  kIo,
  kNumeric,
};

std::string_view ErrorKindName(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string &what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void Fail(ErrorKind kind, const std::string &what) {
  throw Error(kind, what);
}

}  // namespace xling

#endif  // XLING_ERROR_H_
