// SPDX-License-Identifier: Apache-2.0
#include "xling/error.h"

namespace xling {

std::string_view ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid_argument";
    case ErrorKind::kDimensionMismatch: return "dimension_mismatch";
    case ErrorKind::kFrameMismatch: return "frame_mismatch";
    case ErrorKind::kBadMagic: return "bad_magic";
    case ErrorKind::kTruncated: return "truncated";
    case ErrorKind::kNotStochastic: return "not_stochastic";
    case ErrorKind::kDuplicateToken: return "duplicate_token";
    case ErrorKind::kNoBlank: return "no_blank";
    case ErrorKind::kDuplicateUtterance: return "duplicate_utterance";
    case ErrorKind::kMissingFile: return "missing_file";
    case ErrorKind::kUnknownLanguage: return "unknown_language";
    case ErrorKind::kCorruptCheckpoint: return "corrupt_checkpoint";
    case ErrorKind::kParse: return "parse";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kNumeric: return "numeric";
  }
  return "unknown";
}

}  // namespace xling
