// SPDX-License-Identifier: Apache-2.0
#include "xling/posterior_io.h"

#include <cmath>
#include <set>
#include <sstream>

#include "json.hpp"

#include "byte_io.h"
#include "xling/error.h"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace xling {
namespace {

constexpr std::string_view kPosteriorMagic = "XLPO";
constexpr std::string_view kFeatureMagic = "XLFT";

std::string EncodeFrames(std::string_view magic, const LangId &lang,
                         const std::string &utt, const Matrix &m) {
  detail::ByteWriter w;
  w.Bytes(magic);
  w.U16(kFrameFileVersion);
  w.Str16(lang);
  w.Str16(utt);
  w.U32(static_cast<std::uint32_t>(m.rows()));
  w.U32(static_cast<std::uint32_t>(m.cols()));
  for (double v : m.values()) w.F32(static_cast<float>(v));
  return w.buffer();
}

struct RawFrames {
  LangId lang;
  std::string utt;
  Matrix m;
};

RawFrames DecodeFrames(std::string_view magic, std::string_view bytes) {
  detail::ByteReader r(bytes);
  if (bytes.size() < magic.size() || r.Bytes(magic.size()) != magic)
    Fail(ErrorKind::kBadMagic, "magic mismatch: expected " + std::string(magic));
  const auto version = r.U16();
  if (version != kFrameFileVersion)
    Fail(ErrorKind::kParse, "unsupported version " + std::to_string(version));
  RawFrames out;
  out.lang = r.Str16();
  out.utt = r.Str16();
  const std::size_t rows = r.U32();
  const std::size_t cols = r.U32();
  if (r.remaining() < rows * cols * 4) Fail(ErrorKind::kTruncated, "truncated");
  if (r.remaining() > rows * cols * 4)
    Fail(ErrorKind::kParse, "trailing bytes after payload");
  std::vector<double> data(rows * cols);
  for (double &v : data) {
    v = static_cast<double>(r.F32());
    if (!std::isfinite(v)) Fail(ErrorKind::kParse, "non-finite value in " + out.utt);
  }
  out.m = Matrix(rows, cols, std::move(data));
  return out;
}

void CheckUttId(std::string_view utt) {
  if (utt.empty() || utt.find('/') != std::string_view::npos ||
      utt.find('\\') != std::string_view::npos)
    Fail(ErrorKind::kInvalidArgument, "invalid utt_id '" + std::string(utt) + "'");
}

}  // namespace

void ValidatePosteriors(const PosteriorSequence &seq, double tol) {
  if (seq.num_frames() < 1)
    Fail(ErrorKind::kInvalidArgument, "posterior sequence has no frames: " + seq.utt_id);
  if (seq.dim() < 2)
    Fail(ErrorKind::kInvalidArgument, "posterior dimension < 2: " + seq.utt_id);
  for (std::size_t t = 0; t < seq.num_frames(); ++t) {
    double sum = 0.0;
    for (double v : seq.frames.row(t)) {
      if (!std::isfinite(v) || v < 0.0 || v > 1.0 + tol)
        Fail(ErrorKind::kNotStochastic, "row not stochastic: " + seq.utt_id +
                                            " frame " + std::to_string(t));
      sum += v;
    }
    if (std::abs(sum - 1.0) > tol)
      Fail(ErrorKind::kNotStochastic, "row not stochastic: " + seq.utt_id +
                                          " frame " + std::to_string(t));
  }
}

std::string EncodePosteriors(const PosteriorSequence &seq) {
  ValidatePosteriors(seq, kFileRowTolerance);
  return EncodeFrames(kPosteriorMagic, seq.lang_id, seq.utt_id, seq.frames);
}

PosteriorSequence DecodePosteriors(std::string_view bytes) {
  auto raw = DecodeFrames(kPosteriorMagic, bytes);
  PosteriorSequence seq{std::move(raw.lang), std::move(raw.utt), std::move(raw.m)};
  ValidatePosteriors(seq, kFileRowTolerance);
  for (std::size_t t = 0; t < seq.num_frames(); ++t) {
    auto row = seq.frames.row(t);
    double sum = 0.0;
    for (double v : row) sum += v;
    for (double &v : row) v /= sum;
  }
  return seq;
}

void WritePosteriors(const PosteriorSequence &seq, const fs::path &path) {
  detail::WriteFileBytes(path, EncodePosteriors(seq));
}

PosteriorSequence ReadPosteriors(const fs::path &path) {
  return DecodePosteriors(detail::ReadFileBytes(path));
}

std::string EncodeFeatures(const FeatureSequence &seq) {
  if (!seq.frames.AllFinite())
    Fail(ErrorKind::kInvalidArgument, "non-finite feature in " + seq.utt_id);
  return EncodeFrames(kFeatureMagic, seq.lang_id, seq.utt_id, seq.frames);
}

FeatureSequence DecodeFeatures(std::string_view bytes) {
  auto raw = DecodeFrames(kFeatureMagic, bytes);
  return {std::move(raw.lang), std::move(raw.utt), std::move(raw.m)};
}

void WriteFeatures(const FeatureSequence &seq, const fs::path &path) {
  detail::WriteFileBytes(path, EncodeFeatures(seq));
}

FeatureSequence ReadFeatures(const fs::path &path) {
  return DecodeFeatures(detail::ReadFileBytes(path));
}

fs::path PosteriorPath(const fs::path &dir, std::string_view utt_id) {
  CheckUttId(utt_id);
  return dir / (std::string(utt_id) + ".xlpo");
}

std::map<std::string, PosteriorSequence> ReadPosteriorDir(const fs::path &dir) {
  if (!fs::is_directory(dir))
    Fail(ErrorKind::kMissingFile, "missing file: posterior directory " + dir.string());
  std::map<std::string, PosteriorSequence> out;
  for (const auto &entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".xlpo") continue;
    auto seq = ReadPosteriors(entry.path());
    auto utt = seq.utt_id;
    if (!out.emplace(utt, std::move(seq)).second)
      Fail(ErrorKind::kDuplicateUtterance, "duplicate utt_id " + utt + " in " + dir.string());
  }
  return out;
}

// ---------------------------------------------------------------------------

TokenInventory::TokenInventory(LangId lang_id, std::vector<std::string> tokens,
                               std::size_t blank_index, char space_marker)
    : lang_id_(std::move(lang_id)),
      tokens_(std::move(tokens)),
      blank_index_(blank_index),
      space_marker_(space_marker) {
  std::set<std::string_view> seen;
  for (const auto &t : tokens_) {
    if (t.empty()) Fail(ErrorKind::kParse, "empty token in inventory " + lang_id_);
    if (!seen.insert(t).second)
      Fail(ErrorKind::kDuplicateToken, "duplicate token '" + t + "'");
  }
  if (tokens_.size() < 2)
    Fail(ErrorKind::kInvalidArgument, "inventory needs at least 2 tokens");
  if (blank_index_ >= tokens_.size()) Fail(ErrorKind::kNoBlank, "no blank token");
}

std::optional<std::size_t> TokenInventory::IndexOf(std::string_view token) const {
  for (std::size_t i = 0; i < tokens_.size(); ++i)
    if (tokens_[i] == token) return i;
  return std::nullopt;
}

std::string TokenInventory::Detokenize(const std::vector<std::size_t> &ids) const {
  std::string text;
  for (auto id : ids) {
    if (id == blank_index_) continue;
    text += tokens_.at(id);
  }
  for (char &c : text)
    if (c == space_marker_) c = ' ';
  return text;
}

TokenInventory ParseInventory(std::string_view jsonl) {
  std::istringstream in{std::string(jsonl)};
  std::string line;
  std::optional<json> header;
  std::vector<std::string> tokens;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error &e) {
      Fail(ErrorKind::kParse, "inventory line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!obj.is_object()) Fail(ErrorKind::kParse, "inventory line is not an object");
    if (!header) {
      if (!obj.contains("lang_id") || !obj["lang_id"].is_string())
        Fail(ErrorKind::kParse, "inventory header needs lang_id");
      header = obj;
      continue;
    }
    if (!obj.contains("token") || !obj["token"].is_string())
      Fail(ErrorKind::kParse, "inventory line " + std::to_string(lineno) + " has no token");
    tokens.push_back(obj["token"].get<std::string>());
  }
  if (!header) Fail(ErrorKind::kParse, "empty inventory");
  if (!header->contains("blank_index") || !(*header)["blank_index"].is_number_unsigned())
    Fail(ErrorKind::kNoBlank, "no blank token");
  char marker = '_';
  if (header->contains("space_marker")) {
    const auto &sm = (*header)["space_marker"];
    if (!sm.is_string() || sm.get<std::string>().size() != 1)
      Fail(ErrorKind::kParse, "space_marker must be one character");
    marker = sm.get<std::string>()[0];
  }
  return TokenInventory((*header)["lang_id"].get<std::string>(), std::move(tokens),
                        (*header)["blank_index"].get<std::size_t>(), marker);
}

TokenInventory LoadInventory(const fs::path &path) {
  return ParseInventory(detail::ReadFileBytes(path));
}

std::string SerializeInventory(const TokenInventory &inventory) {
  std::string out;
  ordered_json header;
  header["lang_id"] = inventory.lang_id();
  header["blank_index"] = inventory.blank_index();
  header["space_marker"] = std::string(1, inventory.space_marker());
  out += header.dump() + "\n";
  for (const auto &t : inventory.tokens()) {
    ordered_json obj;
    obj["token"] = t;
    out += obj.dump() + "\n";
  }
  return out;
}

void SaveInventory(const TokenInventory &inventory, const fs::path &path) {
  detail::WriteFileBytes(path, SerializeInventory(inventory));
}

// ---------------------------------------------------------------------------

void ValidateManifest(const CorpusManifest &manifest) {
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto &r : manifest.records) {
    if (r.utt_id.empty()) Fail(ErrorKind::kParse, "record without utt_id");
    if (!seen.emplace(r.audio_lang(), r.utt_id).second)
      Fail(ErrorKind::kDuplicateUtterance,
           "duplicate utt_id " + r.utt_id + " in language " + r.audio_lang());
  }
}

CorpusManifest LoadManifest(const fs::path &path) {
  const std::string text = detail::ReadFileBytes(path);
  const fs::path base = fs::absolute(path).parent_path();
  std::istringstream in(text);
  std::string line;
  CorpusManifest manifest;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    ManifestRecord r;
    try {
      auto obj = json::parse(line);
      r.utt_id = obj.at("utt_id").get<std::string>();
      r.lang_id = obj.at("lang_id").get<std::string>();
      fs::path feat = obj.at("feature_file").get<std::string>();
      r.feature_file = (feat.is_absolute() ? feat : base / feat).lexically_normal();
      r.transcript = obj.at("transcript").get<std::string>();
      r.duration_frames = obj.at("duration_frames").get<std::size_t>();
      if (obj.contains("phones")) r.phones = obj["phones"].get<std::vector<int>>();
      if (obj.contains("frame_labels"))
        r.frame_labels = obj["frame_labels"].get<std::vector<int>>();
      r.ciphered = obj.value("ciphered", false);
      r.source_lang = obj.value("source_lang", std::string());
      r.empty = obj.value("empty", false);
    } catch (const json::exception &e) {
      Fail(ErrorKind::kParse, where + ": " + e.what());
    }
    if (r.ciphered && r.source_lang.empty())
      Fail(ErrorKind::kParse, where + ": ciphered record without source_lang");
    if (!r.phones.empty() && r.phones.size() != r.duration_frames)
      Fail(ErrorKind::kFrameMismatch, where + ": phones length != duration_frames");
    if (!r.frame_labels.empty() && r.frame_labels.size() != r.duration_frames)
      Fail(ErrorKind::kFrameMismatch, where + ": frame_labels length != duration_frames");
    if (!fs::exists(r.feature_file))
      Fail(ErrorKind::kMissingFile, "missing file: " + r.feature_file.string() +
                                        " (" + where + ")");
    manifest.records.push_back(std::move(r));
  }
  ValidateManifest(manifest);
  return manifest;
}

void SaveManifest(const CorpusManifest &manifest, const fs::path &path) {
  ValidateManifest(manifest);
  const fs::path base = fs::absolute(path).parent_path().lexically_normal();
  std::string out;
  for (const auto &r : manifest.records) {
    ordered_json obj;
    obj["utt_id"] = r.utt_id;
    obj["lang_id"] = r.lang_id;
    const fs::path abs = fs::absolute(r.feature_file).lexically_normal();
    obj["feature_file"] = abs.lexically_relative(base).generic_string();
    obj["transcript"] = r.transcript;
    obj["duration_frames"] = r.duration_frames;
    if (!r.phones.empty()) obj["phones"] = r.phones;
    if (!r.frame_labels.empty()) obj["frame_labels"] = r.frame_labels;
    if (r.ciphered) {
      obj["ciphered"] = true;
      obj["source_lang"] = r.source_lang;
      obj["empty"] = r.empty;
    }
    out += obj.dump() + "\n";
  }
  detail::WriteFileBytes(path, out);
}

}  // namespace xling
