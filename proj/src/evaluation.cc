// SPDX-License-Identifier: Apache-2.0
#include "xling/evaluation.h"

#include <cstdio>
#include <set>
#include <sstream>

#include "byte_io.h"
#include "json.hpp"
#include "xling/decode_cipher.h"
#include "xling/error.h"
#include "xling/numerics.h"
#include "xling/parallel.h"

using nlohmann::json;
using nlohmann::ordered_json;

namespace xling {

AccuracyReport MappingAccuracy(std::span<const PosteriorSequence> mapped,
                               std::span<const PosteriorSequence> target,
                               const std::vector<std::size_t> &ns, const LangId &target_lang,
                               const LangId &source_lang) {
  if (mapped.size() != target.size())
    Fail(ErrorKind::kFrameMismatch, "frame mismatch: " + std::to_string(mapped.size()) +
                                        " mapped vs " + std::to_string(target.size()) +
                                        " target sequences");
  if (ns.empty()) Fail(ErrorKind::kInvalidArgument, "no n values requested");
  AccuracyReport report{target_lang, source_lang, 0, {}, {}};
  for (auto n : ns) report.correct[n] = 0;
  const std::size_t max_n = *std::max_element(ns.begin(), ns.end());
  for (std::size_t i = 0; i < mapped.size(); ++i) {
    const auto &m = mapped[i];
    const auto &t = target[i];
    if (m.num_frames() != t.num_frames())
      Fail(ErrorKind::kFrameMismatch, "frame mismatch for " + t.utt_id);
    if (m.dim() != t.dim())
      Fail(ErrorKind::kDimensionMismatch, "dimension mismatch for " + t.utt_id);
    for (std::size_t f = 0; f < t.num_frames(); ++f) {
      const std::size_t want = Argmax(t.frames.row(f));
      const auto top = TopNIndices(m.frames.row(f), max_n);
      const auto pos = static_cast<std::size_t>(std::find(top.begin(), top.end(), want) - top.begin());
      for (auto n : ns)
        if (pos < n) ++report.correct[n];
    }
    report.total_frames += t.num_frames();
  }
  if (report.total_frames == 0) Fail(ErrorKind::kInvalidArgument, "no frames to score");
  for (const auto &[n, c] : report.correct)
    report.accuracy[n] = static_cast<double>(c) / static_cast<double>(report.total_frames);
  return report;
}

std::u32string CerCharacters(std::string_view text, char space_marker) {
  std::u32string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size();) {
    const auto c = static_cast<unsigned char>(text[i]);
    std::size_t len = 1;
    char32_t cp = c;
    if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    }
    bool ok = i + len <= text.size();
    for (std::size_t k = 1; ok && k < len; ++k) {
      const auto cc = static_cast<unsigned char>(text[i + k]);
      ok = (cc & 0xC0) == 0x80;
      cp = (cp << 6) | (cc & 0x3F);
    }
    if (!ok) {
      // Invalid sequence: count the lead byte as its own character.
      len = 1;
      cp = c;
    }
    out.push_back(c == static_cast<unsigned char>(space_marker) && len == 1 ? U' ' : cp);
    i += len;
  }
  return out;
}

CerReport ComputeCer(const std::vector<std::string> &refs, const std::vector<std::string> &hyps,
                     const LangId &lang, char space_marker) {
  if (refs.size() != hyps.size())
    Fail(ErrorKind::kInvalidArgument, "reference/hypothesis count mismatch: " +
                                          std::to_string(refs.size()) + " vs " +
                                          std::to_string(hyps.size()));
  if (refs.empty()) Fail(ErrorKind::kInvalidArgument, "no references");
  CerReport report{lang, refs.size(), 0, 0, 0.0};
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const auto ref = CerCharacters(refs[i], space_marker);
    const auto hyp = CerCharacters(hyps[i], space_marker);
    if (ref.empty()) Fail(ErrorKind::kInvalidArgument, "empty reference at index " + std::to_string(i));
    report.ref_chars += ref.size();
    report.edits += Levenshtein<char32_t>(ref, hyp);
  }
  report.cer_percent =
      100.0 * static_cast<double>(report.edits) / static_cast<double>(report.ref_chars);
  return report;
}

CerReport CrossLingualEval(std::span<const PosteriorSequence> source_posteriors,
                           const MesdModel &model, const LangId &source_lang,
                           const std::map<std::string, std::string> &refs,
                           const TokenInventory &target_inventory, std::size_t jobs) {
  if (!model.HasEncoder(source_lang))
    Fail(ErrorKind::kUnknownLanguage, "no encoder for language " + source_lang);
  std::vector<std::string> ref_text(source_posteriors.size()), hyp_text(source_posteriors.size());
  for (std::size_t i = 0; i < source_posteriors.size(); ++i) {
    auto it = refs.find(source_posteriors[i].utt_id);
    if (it == refs.end())
      Fail(ErrorKind::kMissingFile, "no reference for utt " + source_posteriors[i].utt_id);
    ref_text[i] = it->second;
  }
  ParallelFor(source_posteriors.size(), jobs, [&](std::size_t i) {
    const auto mapped = Forward(model, source_lang, source_posteriors[i]);
    hyp_text[i] = GreedyDecode(mapped.posteriors, target_inventory).text;
  });
  return ComputeCer(ref_text, hyp_text, model.target_lang_id, target_inventory.space_marker());
}

std::string AccuracyReportToJson(const AccuracyReport &r) {
  ordered_json j;
  j["target_lang"] = r.target_lang;
  j["source_lang"] = r.source_lang;
  j["total_frames"] = r.total_frames;
  ordered_json acc = ordered_json::object(), cor = ordered_json::object();
  for (const auto &[n, a] : r.accuracy) acc[std::to_string(n)] = a;
  for (const auto &[n, c] : r.correct) cor[std::to_string(n)] = c;
  j["accuracy"] = acc;
  j["correct"] = cor;
  return j.dump();
}

AccuracyReport ParseAccuracyReport(std::string_view line) {
  AccuracyReport r;
  try {
    auto j = json::parse(line);
    r.target_lang = j.at("target_lang").get<std::string>();
    r.source_lang = j.at("source_lang").get<std::string>();
    r.total_frames = j.at("total_frames").get<std::size_t>();
    for (const auto &[k, v] : j.at("accuracy").items())
      r.accuracy[std::stoul(k)] = v.get<double>();
    for (const auto &[k, v] : j.at("correct").items())
      r.correct[std::stoul(k)] = v.get<std::size_t>();
  } catch (const std::exception &e) {
    Fail(ErrorKind::kParse, std::string("accuracy report: ") + e.what());
  }
  return r;
}

std::vector<AccuracyReport> LoadAccuracyReports(const std::filesystem::path &path) {
  std::istringstream in(detail::ReadFileBytes(path));
  std::vector<AccuracyReport> out;
  std::string line;
  while (std::getline(in, line))
    if (line.find_first_not_of(" \t\r") != std::string::npos)
      out.push_back(ParseAccuracyReport(line));
  return out;
}

std::string CerReportToJson(const CerReport &r) {
  ordered_json j;
  j["lang"] = r.lang;
  j["utterances"] = r.utterances;
  j["ref_chars"] = r.ref_chars;
  j["edits"] = r.edits;
  j["cer_percent"] = r.cer_percent;
  return j.dump();
}

std::string FormatAccuracyTable(const std::vector<AccuracyReport> &reports) {
  std::set<std::size_t> ns;
  for (const auto &r : reports)
    for (const auto &[n, a] : r.accuracy) ns.insert(n);
  std::ostringstream out;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%-8s %-8s", "Target", "Source");
  out << buf;
  for (auto n : ns) {
    std::snprintf(buf, sizeof(buf), " %8s", ("n=" + std::to_string(n)).c_str());
    out << buf;
  }
  out << "\n";
  for (const auto &r : reports) {
    std::snprintf(buf, sizeof(buf), "%-8s %-8s", r.target_lang.c_str(), r.source_lang.c_str());
    out << buf;
    for (auto n : ns) {
      auto it = r.accuracy.find(n);
      if (it == r.accuracy.end()) std::snprintf(buf, sizeof(buf), " %8s", "-");
      else std::snprintf(buf, sizeof(buf), " %8.2f", 100.0 * it->second);
      out << buf;
    }
    out << "\n";
  }
  return out.str();
}

std::string FormatCerTable(const std::map<LangId, std::map<LangId, double>> &cer) {
  std::set<LangId> sources;
  for (const auto &[t, row] : cer)
    for (const auto &[s, v] : row) sources.insert(s);
  std::ostringstream out;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%-8s", "Target");
  out << buf;
  for (const auto &s : sources) {
    std::snprintf(buf, sizeof(buf), " %8s", s.c_str());
    out << buf;
  }
  out << "\n";
  for (const auto &[t, row] : cer) {
    std::snprintf(buf, sizeof(buf), "%-8s", t.c_str());
    out << buf;
    for (const auto &s : sources) {
      auto it = row.find(s);
      if (it == row.end()) std::snprintf(buf, sizeof(buf), " %8s", "-");
      else std::snprintf(buf, sizeof(buf), " %8.2f", it->second);
      out << buf;
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace xling
