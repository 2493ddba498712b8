// SPDX-License-Identifier: Apache-2.0
/**
 * @file   posterior_io.h
 * @brief  Posterior and feature files, token inventories and corpus
 *         manifests.
 *
 * Binary layout of `.xlpo` (posteriors) and `.xlft` (features), all
 * integers little-endian:
 *
 *   magic      4 bytes  "XLPO" | "XLFT"
 *   version    u16      (1)
 *   lang_id    u16 length + UTF-8 bytes
 *   utt_id     u16 length + UTF-8 bytes
 *   T          u32      frames
 *   d          u32      columns
 *   payload    T*d IEEE-754 binary32, row-major
 *
 * Posterior rows must sum to 1 within kFileRowTolerance; they are widened to
 * double and renormalized on load. Feature rows carry no constraint.
 *
 * Inventories and manifests are JSON lines. An inventory is a header object
 * {"lang_id", "blank_index", "space_marker"} followed by one {"token"} object
 * per line in index order. A manifest has one record object per line.
 */
#ifndef XLING_POSTERIOR_IO_H_
#define XLING_POSTERIOR_IO_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "xling/matrix.h"

namespace xling {

using LangId = std::string;

inline constexpr std::uint16_t kFrameFileVersion = 1;
inline constexpr double kFileRowTolerance = 1e-4;
inline constexpr double kMemoryRowTolerance = 1e-6;

struct PosteriorSequence {
  LangId lang_id;
  std::string utt_id;
  Matrix frames;  // T x d, row-stochastic

  std::size_t num_frames() const { return frames.rows(); }
  std::size_t dim() const { return frames.cols(); }
};

struct FeatureSequence {
  LangId lang_id;
  std::string utt_id;
  Matrix frames;  // T x feature_dim
};

// Throws kNotStochastic ("row not stochastic") or kInvalidArgument when the
// sequence breaks the T >= 1, d >= 2, row-sum invariants at tolerance `tol`.
void ValidatePosteriors(const PosteriorSequence &seq,
                        double tol = kMemoryRowTolerance);

std::string EncodePosteriors(const PosteriorSequence &seq);
PosteriorSequence DecodePosteriors(std::string_view bytes);
void WritePosteriors(const PosteriorSequence &seq,
                     const std::filesystem::path &path);
PosteriorSequence ReadPosteriors(const std::filesystem::path &path);

std::string EncodeFeatures(const FeatureSequence &seq);
FeatureSequence DecodeFeatures(std::string_view bytes);
void WriteFeatures(const FeatureSequence &seq,
                   const std::filesystem::path &path);
FeatureSequence ReadFeatures(const std::filesystem::path &path);

// Every `*.xlpo` in `dir`, keyed by utt_id.
std::map<std::string, PosteriorSequence> ReadPosteriorDir(
    const std::filesystem::path &dir);
std::filesystem::path PosteriorPath(const std::filesystem::path &dir,
                                    std::string_view utt_id);

class TokenInventory {
 public:
  TokenInventory() = default;
  // Validates uniqueness, size >= 2 and blank_index range.
  TokenInventory(LangId lang_id, std::vector<std::string> tokens,
                 std::size_t blank_index, char space_marker = '_');

  const LangId &lang_id() const { return lang_id_; }
  const std::vector<std::string> &tokens() const { return tokens_; }
  const std::string &token(std::size_t i) const { return tokens_.at(i); }
  std::size_t size() const { return tokens_.size(); }
  std::size_t blank_index() const { return blank_index_; }
  char space_marker() const { return space_marker_; }
  std::optional<std::size_t> IndexOf(std::string_view token) const;

  // Concatenates tokens (blank skipped) and maps the space marker to ' '.
  std::string Detokenize(const std::vector<std::size_t> &ids) const;

  friend bool operator==(const TokenInventory &, const TokenInventory &) = default;

 private:
  LangId lang_id_;
  std::vector<std::string> tokens_;
  std::size_t blank_index_ = 0;
  char space_marker_ = '_';
};

TokenInventory ParseInventory(std::string_view jsonl);
TokenInventory LoadInventory(const std::filesystem::path &path);
std::string SerializeInventory(const TokenInventory &inventory);
void SaveInventory(const TokenInventory &inventory,
                   const std::filesystem::path &path);

struct ManifestRecord {
  std::string utt_id;
  LangId lang_id;
  std::filesystem::path feature_file;  // absolute once loaded
  std::string transcript;
  std::size_t duration_frames = 0;
  // Latent phone per frame; synthetic corpora only.
  std::vector<int> phones;
  // Token index per frame in lang_id's inventory, when known.
  std::vector<int> frame_labels;
  // Augmentation fields.
  bool ciphered = false;
  LangId source_lang;
  bool empty = false;

  // Language of the underlying audio.
  const LangId &audio_lang() const { return ciphered ? source_lang : lang_id; }
};

struct CorpusManifest {
  std::vector<ManifestRecord> records;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
};

// Rejects duplicate (audio language, utt_id) pairs with kDuplicateUtterance.
void ValidateManifest(const CorpusManifest &manifest);

// Relative feature paths resolve against the manifest's directory and must
// exist ("missing file").
CorpusManifest LoadManifest(const std::filesystem::path &path);
// Feature paths are written relative to the manifest's directory.
void SaveManifest(const CorpusManifest &manifest,
                  const std::filesystem::path &path);

}  // namespace xling

#endif  // XLING_POSTERIOR_IO_H_
