// SPDX-License-Identifier: Apache-2.0
//
// xling: command-line front end for the cross-lingual posterior mapping
// pipeline. Exit codes: 0 ok, 2 configuration error, 3 data error,
// 4 numeric failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "xling/decode_cipher.h"
#include "xling/error.h"
#include "xling/evaluation.h"
#include "xling/mesd_model.h"
#include "xling/posterior_io.h"
#include "xling/synth_fixture.h"
#include "xling/training.h"

namespace fs = std::filesystem;
using namespace xling;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

// Raised while arguments are still being validated, before any output exists.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <typename Fn>
auto Configure(Fn &&fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const std::exception &e) {
    throw ConfigError(e.what());
  }
}

std::string ReadText(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kMissingFile, "missing file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteText(const fs::path &path, const std::string &text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) Fail(ErrorKind::kIo, "cannot write " + path.string());
    out << text;
    if (!out) Fail(ErrorKind::kIo, "cannot write " + path.string());
  }
  fs::rename(tmp, path);
}

// "lang=path" pairs; duplicate languages are rejected.
std::map<LangId, fs::path> ParseLangPaths(const std::vector<std::string> &items,
                                          const char *what) {
  std::map<LangId, fs::path> out;
  for (const auto &item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == item.size())
      throw ConfigError(std::string(what) + " expects LANG=PATH, got '" + item + "'");
    const LangId lang = item.substr(0, eq);
    if (!out.emplace(lang, item.substr(eq + 1)).second)
      throw ConfigError(std::string(what) + " lists " + lang + " twice");
  }
  return out;
}

std::vector<std::size_t> ParseNs(const std::string &text) {
  std::vector<std::size_t> ns;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::size_t pos = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(tok, &pos);
    } catch (const std::exception &) {
      pos = 0;
    }
    if (pos != tok.size() || v == 0) throw ConfigError("bad n value '" + tok + "'");
    ns.push_back(v);
  }
  if (ns.empty()) throw ConfigError("no n values");
  return ns;
}

void RequireDir(const fs::path &dir, const std::string &what) {
  if (!fs::is_directory(dir))
    Fail(ErrorKind::kMissingFile, "missing " + what + " directory " + dir.string());
}

// utt_id<TAB>text lines, or a manifest (*.jsonl) whose transcripts are used.
std::vector<std::pair<std::string, std::string>> ReadTranscripts(const fs::path &path) {
  std::vector<std::pair<std::string, std::string>> out;
  if (path.extension() == ".jsonl") {
    for (const auto &r : LoadManifest(path).records) out.emplace_back(r.utt_id, r.transcript);
    return out;
  }
  std::istringstream in(ReadText(path));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) out.emplace_back(line, "");
    else out.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }
  return out;
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  std::string spec, out, write_spec;
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
};

int RunSynth(const SynthArgs &a) {
  if (!a.write_spec.empty()) {
    WriteText(a.write_spec, SerializeFixtureConfig(DemoFixtureConfig()));
    std::cout << "wrote " << a.write_spec << "\n";
    return kExitOk;
  }
  SynthFixtureConfig cfg = Configure([&] {
    SynthFixtureConfig c = a.spec.empty() ? DemoFixtureConfig() : ParseFixtureConfig(ReadText(a.spec));
    if (a.seed) {
      c.am.seed = *a.seed;
      for (auto &l : c.languages) l.corpus_seed ^= *a.seed * 0x9E3779B97F4A7C15ull;
    }
    BuildLanguageSpecs(c);
    if (a.out.empty()) throw ConfigError("--out is required");
    return c;
  });
  // Built beside the destination and moved into place only when complete.
  const fs::path out = fs::absolute(a.out).lexically_normal();
  const fs::path staging = out.string() + ".partial";
  fs::remove_all(staging);
  FixtureSummary summary;
  try {
    summary = BuildFixture(cfg, staging, a.jobs);
  } catch (...) {
    fs::remove_all(staging);
    throw;
  }
  fs::remove_all(out);
  fs::rename(staging, out);

  std::printf("%-8s %10s %10s\n", "Lang", "train_acc", "test_acc");
  for (const auto &[lang, acc] : summary.train_accuracy)
    std::printf("%-8s %10.4f %10.4f\n", lang.c_str(), acc, summary.test_accuracy.at(lang));
  std::printf("fixture written to %s\n", out.string().c_str());
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string target, target_posteriors, inventory, out, config_file;
  std::vector<std::string> sources;
  std::size_t hidden = 16;
  bool resume = false;
  TrainConfig config;
  std::string optimizer = "adam", weighting = "rank_sum";
};

int RunTrainMap(TrainArgs a) {
  auto sources = ParseLangPaths(a.sources, "--source");
  TrainConfig config = Configure([&] {
    TrainConfig c = a.config;
    c.optimizer = ParseOptimizer(a.optimizer);
    c.weighting = ParseWeighting(a.weighting);
    if (!a.config_file.empty()) c = ParseTrainConfig(ReadText(a.config_file), c);
    ValidateTrainConfig(c);
    if (sources.empty()) throw ConfigError("at least one --source is required");
    if (a.hidden == 0) throw ConfigError("--hidden must be positive");
    return c;
  });

  const TokenInventory inventory = LoadInventory(a.inventory);
  if (!a.target.empty() && a.target != inventory.lang_id())
    Fail(ErrorKind::kInvalidArgument,
         "--target " + a.target + " disagrees with inventory " + inventory.lang_id());
  RequireDir(a.target_posteriors, "target posterior");
  for (const auto &[lang, dir] : sources) RequireDir(dir, lang + " posterior");
  const auto corpus = PairPosteriorDirs(a.target_posteriors, sources);
  if (corpus.empty()) Fail(ErrorKind::kMissingFile, "no target posteriors found");

  std::map<LangId, std::size_t> dims;
  for (const auto &[lang, seq] : corpus.front().sources) dims[lang] = seq.dim();

  const fs::path out = a.out;
  const fs::path state_path = out / "train_state.xlts";
  TrainState state;
  if (a.resume) {
    state = LoadTrainState(state_path);
    if (state.model.target_lang_id != inventory.lang_id() ||
        state.model.target_dim() != inventory.size())
      Fail(ErrorKind::kDimensionMismatch, "saved state does not target " + inventory.lang_id());
    for (const auto &[lang, d] : dims)
      if (!state.model.HasEncoder(lang) ||
          state.model.encoders.at(lang).input_dim != d)
        Fail(ErrorKind::kDimensionMismatch, "saved state has no matching encoder for " + lang);
  } else {
    state = StartTraining(InitModel(inventory, dims, a.hidden, config.seed), corpus, config);
  }
  ContinueTraining(&state, corpus, config);

  SaveCheckpoint(state.best_model, out / "model.xlck");
  SaveCheckpoint(state.model, out / "last.xlck");
  WriteText(out / "history.jsonl", HistoryToJsonl(state.history));
  WriteText(out / "train_config.txt", SerializeTrainConfig(config));
  SaveTrainState(state, state_path);

  std::printf("%6s %12s %12s\n", "epoch", "train_loss", "dev_loss");
  for (const auto &r : state.history)
    std::printf("%6zu %12.6f %12.6f\n", r.epoch, r.train_loss, r.dev_loss);
  std::printf("best epoch %zu (dev %.6f), %zu parameters\n", state.best_epoch,
              state.best_dev_loss, CountParams(state.best_model));
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string target_posteriors, checkpoint, ns = "1,2,5,10", out;
  std::string refs, inventory, cer_out;
  std::vector<std::string> sources;
  std::size_t jobs = 1;
};

int RunEvalMap(const EvalArgs &a) {
  auto sources = ParseLangPaths(a.sources, "--source");
  const auto ns = ParseNs(a.ns);
  if (sources.empty()) throw ConfigError("at least one --source is required");
  if (!a.refs.empty() && (a.checkpoint.empty() || a.inventory.empty()))
    throw ConfigError("--refs needs --checkpoint and --inventory");

  std::optional<MesdModel> model;
  if (!a.checkpoint.empty()) model = LoadCheckpoint(a.checkpoint);
  RequireDir(a.target_posteriors, "target posterior");
  const auto targets = ReadPosteriorDir(a.target_posteriors);
  if (targets.empty()) Fail(ErrorKind::kMissingFile, "no target posteriors found");
  const LangId target_lang = model ? model->target_lang_id : targets.begin()->second.lang_id;

  std::vector<PosteriorSequence> target_seqs;
  for (const auto &[utt, seq] : targets) target_seqs.push_back(seq);

  std::vector<AccuracyReport> reports;
  std::map<LangId, std::map<LangId, double>> cer_table;
  std::vector<CerReport> cer_reports;
  std::map<std::string, std::string> refs;
  std::optional<TokenInventory> inventory;
  if (!a.refs.empty()) {
    for (auto &[utt, text] : ReadTranscripts(a.refs)) refs[utt] = text;
    inventory = LoadInventory(a.inventory);
  }

  for (const auto &[lang, dir] : sources) {
    RequireDir(dir, lang + " posterior");
    const auto src = ReadPosteriorDir(dir);
    std::vector<PosteriorSequence> inputs, mapped;
    for (const auto &seq : target_seqs) {
      auto it = src.find(seq.utt_id);
      if (it == src.end())
        Fail(ErrorKind::kMissingFile, "missing " + lang + " posteriors for utt " + seq.utt_id);
      inputs.push_back(it->second);
    }
    mapped.resize(inputs.size());
    for (std::size_t i = 0; i < inputs.size(); ++i)
      mapped[i] = model ? Forward(*model, lang, inputs[i]).posteriors : inputs[i];
    reports.push_back(MappingAccuracy(mapped, target_seqs, ns, target_lang, lang));
    if (inventory) {
      auto cer = CrossLingualEval(inputs, *model, lang, refs, *inventory, a.jobs);
      cer.lang = target_lang;
      cer_table[target_lang][lang] = cer.cer_percent;
      cer_reports.push_back(cer);
    }
  }

  std::cout << FormatAccuracyTable(reports);
  if (!cer_table.empty()) std::cout << "\n%CER\n" << FormatCerTable(cer_table);
  if (!a.out.empty()) {
    std::string text;
    for (const auto &r : reports) text += AccuracyReportToJson(r) + "\n";
    WriteText(a.out, text);
  }
  if (!a.cer_out.empty() && !cer_reports.empty()) {
    std::string text;
    for (const auto &r : cer_reports) text += CerReportToJson(r) + "\n";
    WriteText(a.cer_out, text);
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct DecodeArgs {
  std::string inventory, posteriors, checkpoint, source, out;
};

int RunDecode(const DecodeArgs &a) {
  if (a.checkpoint.empty() != a.source.empty())
    throw ConfigError("--checkpoint and --source go together");
  const TokenInventory inventory = LoadInventory(a.inventory);
  std::optional<MesdModel> model;
  if (!a.checkpoint.empty()) model = LoadCheckpoint(a.checkpoint, inventory);

  std::vector<PosteriorSequence> seqs;
  if (fs::is_directory(a.posteriors)) {
    for (auto &[utt, seq] : ReadPosteriorDir(a.posteriors)) seqs.push_back(std::move(seq));
  } else {
    seqs.push_back(ReadPosteriors(a.posteriors));
  }
  std::string text;
  for (const auto &seq : seqs) {
    const auto decoded =
        GreedyDecode(model ? Forward(*model, a.source, seq).posteriors : seq, inventory);
    text += decoded.utt_id + "\t" + decoded.text + "\n";
  }
  std::cout << text;
  if (!a.out.empty()) WriteText(a.out, text);
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct CipherArgs {
  std::string manifest, posteriors, checkpoint, source, inventory, out;
  std::size_t jobs = 1;
};

int RunCipher(const CipherArgs &a) {
  if (a.out.empty()) throw ConfigError("--out is required");
  const TokenInventory inventory = LoadInventory(a.inventory);
  const MesdModel model = LoadCheckpoint(a.checkpoint, inventory);
  const CorpusManifest manifest = LoadManifest(a.manifest);
  RequireDir(a.posteriors, "source posterior");
  const auto posteriors = ReadPosteriorDir(a.posteriors);
  const auto outputs = CipherCorpus(manifest, posteriors, model, a.source, inventory, a.jobs);
  SaveCipherOutputs(outputs, a.out);

  std::size_t empty = 0;
  for (const auto &c : outputs) empty += c.text.empty();
  std::printf("ciphered %zu utterances of %s into %s (%zu empty)\n", outputs.size(),
              a.source.c_str(), inventory.lang_id().c_str(), empty);
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct AugmentArgs {
  std::string target, manifest, mode = "augTwo", reports, out;
  std::vector<std::string> ciphered;
};

int RunAugment(const AugmentArgs &a) {
  const AugMode mode = Configure([&] { return ParseAugMode(a.mode); });
  auto ciphered_paths = ParseLangPaths(a.ciphered, "--ciphered");
  if (ciphered_paths.empty()) throw ConfigError("at least one --ciphered is required");
  if (mode == AugMode::kAugTwo && a.reports.empty())
    throw ConfigError("augTwo needs --reports");
  if (a.out.empty()) throw ConfigError("--out is required");

  const CorpusManifest manifest = LoadManifest(a.manifest);
  std::map<LangId, std::vector<CipherOutput>> ciphered;
  for (const auto &[lang, path] : ciphered_paths) ciphered[lang] = LoadCipherOutputs(path);
  std::vector<AccuracyReport> reports;
  if (!a.reports.empty()) reports = LoadAccuracyReports(a.reports);

  const auto plan = BuildAugmentationPlan(a.target, manifest, ciphered, mode, reports);
  SaveManifest(plan.manifest, a.out);

  const auto added = plan.AugmentedRecords();
  std::size_t empty = 0;
  for (const auto *r : added) empty += r->empty;
  std::printf("mode %s", std::string(AugModeName(mode)).c_str());
  if (plan.closest_lang) std::printf(", closest %s", plan.closest_lang->c_str());
  std::printf(": %zu original + %zu ciphered (%zu empty) records\n", manifest.size(),
              added.size(), empty);
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct CerArgs {
  std::string refs, hyps, lang, out, space_marker = "_";
};

int RunCer(const CerArgs &a) {
  if (a.space_marker.size() != 1) throw ConfigError("--space-marker must be one character");
  const auto refs = ReadTranscripts(a.refs);
  std::map<std::string, std::string> hyps;
  for (auto &[utt, text] : ReadTranscripts(a.hyps)) hyps[utt] = text;
  std::vector<std::string> r, h;
  for (const auto &[utt, text] : refs) {
    auto it = hyps.find(utt);
    if (it == hyps.end()) Fail(ErrorKind::kMissingFile, "no hypothesis for utt " + utt);
    r.push_back(text);
    h.push_back(it->second);
  }
  const auto report = ComputeCer(r, h, a.lang, a.space_marker[0]);
  std::printf("%-8s %6s %8s %8s %8s\n", "Lang", "utts", "chars", "edits", "%CER");
  std::printf("%-8s %6zu %8zu %8zu %8.2f\n", report.lang.c_str(), report.utterances,
              report.ref_chars, report.edits, report.cer_percent);
  if (!a.out.empty()) WriteText(a.out, CerReportToJson(report) + "\n");
  return kExitOk;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Cross-lingual posterior mapping toolkit"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto *s = app.add_subcommand("synth", "Generate the synthetic corpora, toy AMs and posteriors");
  s->add_option("--spec", synth.spec, "Fixture spec JSON (default: built-in demo)");
  s->add_option("--out", synth.out, "Output directory");
  s->add_option("--seed", synth.seed, "Reseeds AM training and corpus sampling");
  s->add_option("--jobs", synth.jobs, "Worker threads")->check(CLI::PositiveNumber);
  s->add_option("--write-spec", synth.write_spec, "Write the demo spec to this file and exit");

  TrainArgs train;
  auto *t = app.add_subcommand("train-map", "Train a multi-encoder mapping model");
  t->add_option("--target", train.target, "Target language (checked against the inventory)");
  t->add_option("--target-posteriors", train.target_posteriors,
                "Target AM posteriors of target audio")->required();
  t->add_option("--source", train.sources, "LANG=DIR source AM posteriors of target audio")
      ->required();
  t->add_option("--inventory", train.inventory, "Target inventory JSONL")->required();
  t->add_option("--out", train.out, "Output directory")->required();
  t->add_option("--hidden", train.hidden, "RNN hidden size per direction");
  t->add_option("--epochs", train.config.epochs);
  t->add_option("--batch-size", train.config.batch_size);
  t->add_option("--lr", train.config.learning_rate);
  t->add_option("--optimizer", train.optimizer, "sgd | adam");
  t->add_option("--weighting", train.weighting, "mean | rank_sum");
  t->add_option("--clip-norm", train.config.clip_norm);
  t->add_option("--dev-fraction", train.config.dev_fraction);
  t->add_option("--seed", train.config.seed);
  t->add_option("--jobs", train.config.jobs);
  t->add_option("--config", train.config_file, "key = value file; overrides flags");
  t->add_flag("--resume", train.resume, "Continue from <out>/train_state.xlts");

  EvalArgs eval;
  auto *e = app.add_subcommand("eval-map", "Top-n mapping accuracy (and optional CER)");
  e->add_option("--target-posteriors", eval.target_posteriors, "Target AM posteriors")->required();
  e->add_option("--source", eval.sources, "LANG=DIR source AM posteriors")->required();
  e->add_option("--checkpoint", eval.checkpoint, "Mapping model; omitted = identity");
  e->add_option("--n", eval.ns, "Comma-separated n values");
  e->add_option("--out", eval.out, "Accuracy reports JSONL");
  e->add_option("--refs", eval.refs, "Reference transcripts (TSV or manifest)");
  e->add_option("--inventory", eval.inventory, "Target inventory, needed with --refs");
  e->add_option("--cer-out", eval.cer_out, "CER reports JSONL");
  e->add_option("--jobs", eval.jobs);

  DecodeArgs dec;
  auto *d = app.add_subcommand("decode", "Greedy decode of posterior files");
  d->add_option("--inventory", dec.inventory)->required();
  d->add_option("--posteriors", dec.posteriors, "An .xlpo file or a directory")->required();
  d->add_option("--checkpoint", dec.checkpoint, "Map through this model first");
  d->add_option("--source", dec.source, "Source language of the posteriors");
  d->add_option("--out", dec.out, "utt<TAB>text output");

  CipherArgs ciph;
  auto *c = app.add_subcommand("cipher", "Transliterate source-language audio into a target script");
  c->add_option("--manifest", ciph.manifest, "Source-language manifest")->required();
  c->add_option("--posteriors", ciph.posteriors, "Source AM posteriors of that audio")->required();
  c->add_option("--checkpoint", ciph.checkpoint)->required();
  c->add_option("--source", ciph.source)->required();
  c->add_option("--inventory", ciph.inventory, "Target inventory")->required();
  c->add_option("--out", ciph.out, "Ciphered JSONL")->required();
  c->add_option("--jobs", ciph.jobs);

  AugmentArgs aug;
  auto *g = app.add_subcommand("augment", "Build an augmentation manifest");
  g->add_option("--target", aug.target)->required();
  g->add_option("--manifest", aug.manifest, "Target-language manifest")->required();
  g->add_option("--ciphered", aug.ciphered, "LANG=FILE ciphered outputs")->required();
  g->add_option("--mode", aug.mode, "augAll | augTwo");
  g->add_option("--reports", aug.reports, "Accuracy reports JSONL (augTwo)");
  g->add_option("--out", aug.out, "Plan manifest JSONL")->required();

  CerArgs cer;
  auto *r = app.add_subcommand("cer", "Character error rate");
  r->add_option("--refs", cer.refs)->required();
  r->add_option("--hyps", cer.hyps)->required();
  r->add_option("--lang", cer.lang);
  r->add_option("--space-marker", cer.space_marker);
  r->add_option("--out", cer.out, "CER report JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &err) {
    const int code = app.exit(err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (s->parsed()) return RunSynth(synth);
    if (t->parsed()) return RunTrainMap(train);
    if (e->parsed()) return RunEvalMap(eval);
    if (d->parsed()) return RunDecode(dec);
    if (c->parsed()) return RunCipher(ciph);
    if (g->parsed()) return RunAugment(aug);
    if (r->parsed()) return RunCer(cer);
  } catch (const ConfigError &err) {
    std::cerr << "config error: " << err.what() << "\n";
    return kExitConfig;
  } catch (const Error &err) {
    std::cerr << ErrorKindName(err.kind()) << ": " << err.what() << "\n";
    return err.kind() == ErrorKind::kNumeric ? kExitNumeric : kExitData;
  } catch (const std::exception &err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitData;
  }
  return kExitConfig;
}
