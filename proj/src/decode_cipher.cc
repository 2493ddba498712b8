// SPDX-License-Identifier: Apache-2.0
#include "xling/decode_cipher.h"

#include <set>
#include <sstream>

#include "byte_io.h"
#include "json.hpp"
#include "xling/error.h"
#include "xling/numerics.h"
#include "xling/parallel.h"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace xling {

DecodeResult GreedyDecode(const PosteriorSequence &posteriors, const TokenInventory &inventory) {
  if (posteriors.dim() != inventory.size())
    Fail(ErrorKind::kDimensionMismatch,
         "dimension mismatch: posteriors have " + std::to_string(posteriors.dim()) +
             " columns, inventory " + inventory.lang_id() + " has " +
             std::to_string(inventory.size()) + " tokens");
  std::vector<std::size_t> best(posteriors.num_frames());
  for (std::size_t t = 0; t < best.size(); ++t) best[t] = Argmax(posteriors.frames.row(t));
  DecodeResult out;
  out.utt_id = posteriors.utt_id;
  out.tokens = CollapseRepeatsAndBlanks(best, inventory.blank_index());
  out.text = inventory.Detokenize(out.tokens);
  return out;
}

std::vector<CipherOutput> CipherCorpus(const CorpusManifest &source_manifest,
                                       const std::map<std::string, PosteriorSequence> &source_posteriors,
                                       const MesdModel &model, const LangId &source_lang,
                                       const TokenInventory &target_inventory, std::size_t jobs) {
  if (!model.HasEncoder(source_lang))
    Fail(ErrorKind::kUnknownLanguage, "no encoder for language " + source_lang);
  if (model.target_dim() != target_inventory.size())
    Fail(ErrorKind::kDimensionMismatch, "dimension mismatch: model and target inventory");
  for (const auto &r : source_manifest.records)
    if (!source_posteriors.count(r.utt_id))
      Fail(ErrorKind::kMissingFile, "missing posteriors for utt " + r.utt_id);

  std::vector<CipherOutput> out(source_manifest.size());
  ParallelFor(source_manifest.size(), jobs, [&](std::size_t i) {
    const auto &r = source_manifest.records[i];
    const auto mapped = Forward(model, source_lang, source_posteriors.at(r.utt_id));
    const auto decoded = GreedyDecode(mapped.posteriors, target_inventory);
    CipherOutput &c = out[i];
    c.utt_id = r.utt_id;
    c.source_lang = source_lang;
    c.feature_file = r.feature_file;
    c.duration_frames = mapped.posteriors.num_frames();
    c.text = decoded.text;
    c.frame_labels.resize(mapped.posteriors.num_frames());
    for (std::size_t t = 0; t < c.frame_labels.size(); ++t)
      c.frame_labels[t] = static_cast<int>(Argmax(mapped.posteriors.frames.row(t)));
  });
  return out;
}

void SaveCipherOutputs(const std::vector<CipherOutput> &outputs, const fs::path &path) {
  const fs::path base = fs::absolute(path).parent_path().lexically_normal();
  std::string text;
  for (const auto &c : outputs) {
    ordered_json j;
    j["utt_id"] = c.utt_id;
    j["source_lang"] = c.source_lang;
    j["feature_file"] =
        fs::absolute(c.feature_file).lexically_normal().lexically_relative(base).generic_string();
    j["duration_frames"] = c.duration_frames;
    j["text"] = c.text;
    j["frame_labels"] = c.frame_labels;
    text += j.dump() + "\n";
  }
  detail::WriteFileBytes(path, text);
}

std::vector<CipherOutput> LoadCipherOutputs(const fs::path &path) {
  const fs::path base = fs::absolute(path).parent_path();
  std::istringstream in(detail::ReadFileBytes(path));
  std::vector<CipherOutput> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    CipherOutput c;
    try {
      auto j = json::parse(line);
      c.utt_id = j.at("utt_id").get<std::string>();
      c.source_lang = j.at("source_lang").get<std::string>();
      fs::path feat = j.at("feature_file").get<std::string>();
      c.feature_file = (feat.is_absolute() ? feat : base / feat).lexically_normal();
      c.duration_frames = j.at("duration_frames").get<std::size_t>();
      c.text = j.at("text").get<std::string>();
      c.frame_labels = j.at("frame_labels").get<std::vector<int>>();
    } catch (const json::exception &e) {
      Fail(ErrorKind::kParse, path.string() + ": " + e.what());
    }
    out.push_back(std::move(c));
  }
  return out;
}

LangId SelectClosestLanguage(std::span<const AccuracyReport> reports) {
  if (reports.empty()) Fail(ErrorKind::kInvalidArgument, "no accuracy reports");
  const AccuracyReport *best = nullptr;
  for (const auto &r : reports) {
    if (r.target_lang != reports.front().target_lang)
      Fail(ErrorKind::kInvalidArgument, "reports disagree on target language");
    auto it = r.accuracy.find(1);
    if (it == r.accuracy.end())
      Fail(ErrorKind::kInvalidArgument, "report for " + r.source_lang + " lacks n=1");
    if (best == nullptr) {
      best = &r;
      continue;
    }
    const double a = it->second, b = best->accuracy.at(1);
    if (a > b || (a == b && r.source_lang < best->source_lang)) best = &r;
  }
  return best->source_lang;
}

std::string_view AugModeName(AugMode mode) {
  return mode == AugMode::kAugAll ? "augAll" : "augTwo";
}

AugMode ParseAugMode(std::string_view name) {
  if (name == "augAll") return AugMode::kAugAll;
  if (name == "augTwo") return AugMode::kAugTwo;
  Fail(ErrorKind::kInvalidArgument, "unknown augmentation mode '" + std::string(name) + "'");
}

std::vector<const ManifestRecord *> AugmentationPlan::AugmentedRecords() const {
  std::vector<const ManifestRecord *> out;
  for (const auto &r : manifest.records)
    if (r.ciphered) out.push_back(&r);
  return out;
}

AugmentationPlan BuildAugmentationPlan(const LangId &target_lang,
                                       const CorpusManifest &target_manifest,
                                       const std::map<LangId, std::vector<CipherOutput>> &ciphered,
                                       AugMode mode, std::span<const AccuracyReport> reports) {
  AugmentationPlan plan;
  plan.target_lang = target_lang;
  plan.mode = mode;
  for (const auto &r : reports)
    if (r.target_lang != target_lang)
      Fail(ErrorKind::kInvalidArgument, "report targets " + r.target_lang + ", plan targets " +
                                            target_lang);

  std::set<LangId> included;
  if (mode == AugMode::kAugTwo) {
    std::set<LangId> reported;
    for (const auto &r : reports) reported.insert(r.source_lang);
    for (const auto &[lang, outs] : ciphered)
      if (!reported.count(lang))
        Fail(ErrorKind::kInvalidArgument, "augTwo needs an accuracy report for source " + lang);
    plan.closest_lang = SelectClosestLanguage(reports);
    if (!ciphered.count(*plan.closest_lang))
      Fail(ErrorKind::kInvalidArgument,
           "closest language " + *plan.closest_lang + " has no ciphered data");
    included.insert(*plan.closest_lang);
  } else {
    for (const auto &[lang, outs] : ciphered) included.insert(lang);
  }

  plan.manifest.records = target_manifest.records;
  for (const auto &[lang, outs] : ciphered) {
    if (!included.count(lang)) continue;
    for (const auto &c : outs) {
      if (c.source_lang != lang)
        Fail(ErrorKind::kInvalidArgument, "cipher output " + c.utt_id + " is from " +
                                              c.source_lang + ", listed under " + lang);
      ManifestRecord r;
      r.utt_id = c.utt_id;
      r.lang_id = target_lang;
      r.feature_file = c.feature_file;
      r.transcript = c.text;
      r.duration_frames = c.duration_frames;
      r.frame_labels = c.frame_labels;
      r.ciphered = true;
      r.source_lang = lang;
      r.empty = c.text.empty();
      plan.manifest.records.push_back(std::move(r));
    }
  }
  ValidateManifest(plan.manifest);
  return plan;
}

}  // namespace xling
