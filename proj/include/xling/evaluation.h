// SPDX-License-Identifier: Apache-2.0
/**
 * @file   evaluation.h
 * @brief  Top-n mapping accuracy and character error rate.
 */
#ifndef XLING_EVALUATION_H_
#define XLING_EVALUATION_H_

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xling/mesd_model.h"
#include "xling/posterior_io.h"

namespace xling {

struct AccuracyReport {
  LangId target_lang;
  LangId source_lang;
  std::size_t total_frames = 0;
  std::map<std::size_t, std::size_t> correct;  // n -> correctly mapped frames
  std::map<std::size_t, double> accuracy;      // n -> correct / total_frames
};

// A frame is correct at n when the target row's argmax is among the mapped
// row's n largest entries. Sequences are paired by position and must agree
// in frame count and width.
AccuracyReport MappingAccuracy(std::span<const PosteriorSequence> mapped,
                               std::span<const PosteriorSequence> target,
                               const std::vector<std::size_t> &ns,
                               const LangId &target_lang, const LangId &source_lang);

struct CerReport {
  LangId lang;
  std::size_t utterances = 0;
  std::size_t ref_chars = 0;
  std::size_t edits = 0;
  double cer_percent = 0.0;  // 100 * edits / ref_chars
};

// Unicode scalar values after mapping `space_marker` to ' '.
std::u32string CerCharacters(std::string_view text, char space_marker = '_');

// Micro-averaged CER. Throws on length mismatch or an empty reference.
CerReport ComputeCer(const std::vector<std::string> &refs, const std::vector<std::string> &hyps,
                     const LangId &lang = {}, char space_marker = '_');

// Source-AM posteriors of target-language audio -> mapping model -> greedy
// decode in the target inventory -> CER against `refs` (keyed by utt_id).
CerReport CrossLingualEval(std::span<const PosteriorSequence> source_posteriors,
                           const MesdModel &model, const LangId &source_lang,
                           const std::map<std::string, std::string> &refs,
                           const TokenInventory &target_inventory, std::size_t jobs = 1);

std::string AccuracyReportToJson(const AccuracyReport &report);
AccuracyReport ParseAccuracyReport(std::string_view json_line);
std::vector<AccuracyReport> LoadAccuracyReports(const std::filesystem::path &path);
std::string CerReportToJson(const CerReport &report);

// "Target  Source  n=1 ..." table with percentages.
std::string FormatAccuracyTable(const std::vector<AccuracyReport> &reports);
// Target rows x source columns of %CER.
std::string FormatCerTable(const std::map<LangId, std::map<LangId, double>> &cer);

}  // namespace xling

#endif  // XLING_EVALUATION_H_
