// SPDX-License-Identifier: Apache-2.0
/**
 * @file   decode_cipher.h
 * @brief  Greedy decoding, ciphered transcription of source-language audio,
 *         closest-language selection and augmentation plans.
 */
#ifndef XLING_DECODE_CIPHER_H_
#define XLING_DECODE_CIPHER_H_

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xling/evaluation.h"
#include "xling/mesd_model.h"
#include "xling/posterior_io.h"

namespace xling {

struct DecodeResult {
  std::string utt_id;
  std::vector<std::size_t> tokens;  // collapsed, blank-free
  std::string text;
};

// Per-frame argmax (ties to the lowest index), merge repeats, drop blanks,
// concatenate tokens with the space marker mapped to ' '.
DecodeResult GreedyDecode(const PosteriorSequence &posteriors, const TokenInventory &inventory);

struct CipherOutput {
  std::string utt_id;
  LangId source_lang;
  std::filesystem::path feature_file;
  std::size_t duration_frames = 0;
  std::string text;
  std::vector<int> frame_labels;  // argmax of the mapped posteriors
};

// For every manifest record: its source-AM posteriors -> mapping model ->
// greedy decode in the target inventory. Output order follows the manifest.
std::vector<CipherOutput> CipherCorpus(
    const CorpusManifest &source_manifest,
    const std::map<std::string, PosteriorSequence> &source_posteriors,
    const MesdModel &model, const LangId &source_lang,
    const TokenInventory &target_inventory, std::size_t jobs = 1);

void SaveCipherOutputs(const std::vector<CipherOutput> &outputs, const std::filesystem::path &path);
std::vector<CipherOutput> LoadCipherOutputs(const std::filesystem::path &path);

// Source with the highest n=1 accuracy; ties go to the smaller lang_id.
LangId SelectClosestLanguage(std::span<const AccuracyReport> reports);

enum class AugMode { kAugAll, kAugTwo };
std::string_view AugModeName(AugMode mode);
AugMode ParseAugMode(std::string_view name);

struct AugmentationPlan {
  LangId target_lang;
  AugMode mode = AugMode::kAugAll;
  std::optional<LangId> closest_lang;
  // Target originals first, then ciphered records (source lang order, then
  // utterance order).
  CorpusManifest manifest;

  std::vector<const ManifestRecord *> AugmentedRecords() const;
};

// kAugTwo requires a report for every ciphered source.
AugmentationPlan BuildAugmentationPlan(const LangId &target_lang,
                                       const CorpusManifest &target_manifest,
                                       const std::map<LangId, std::vector<CipherOutput>> &ciphered,
                                       AugMode mode, std::span<const AccuracyReport> reports);

}  // namespace xling

#endif  // XLING_DECODE_CIPHER_H_
