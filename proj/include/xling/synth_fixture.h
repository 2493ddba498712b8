// SPDX-License-Identifier: Apache-2.0
/**
 * @file   synth_fixture.h
 * @brief  Synthetic multi-language corpora and toy frame-classifier acoustic
 *         models that stand in for real monolingual ASR systems.
 *
 * A synthetic language draws latent phone sequences from a Markov chain
 * (self-transition 0.6, uniform otherwise) and emits Gaussian features
 * around per-phone means. Two languages are "related" when they share
 * emission means, i.e. the same acoustics spelled with different tokens.
 * Latent phone 0 is silence and always spells the blank token.
 */
#ifndef XLING_SYNTH_FIXTURE_H_
#define XLING_SYNTH_FIXTURE_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "xling/matrix.h"
#include "xling/posterior_io.h"

namespace xling {

inline constexpr double kSelfTransition = 0.6;

struct SynthLanguageSpec {
  LangId lang_id;
  int num_latent_phones = 0;
  TokenInventory inventory;
  std::vector<int> phone_to_token;  // latent phone -> inventory index
  Matrix emission_means;            // phones x feature_dim
  double emission_stddev = 0.5;
  std::uint64_t seed = 0;

  std::size_t feature_dim() const { return emission_means.cols(); }
};

void ValidateSpec(const SynthLanguageSpec &spec);

// Means drawn uniformly from [-range, range]^dim, rejected until every pair
// is at least min_separation apart.
Matrix DrawEmissionMeans(int num_phones, std::size_t feature_dim,
                         std::uint64_t seed, double min_separation = 2.0,
                         double range = 2.0);

// Phone 0 -> blank; phones 1.. -> a seeded permutation of the non-blank
// tokens. Requires num_phones == inventory.size().
std::vector<int> DrawPhoneToToken(const TokenInventory &inventory,
                                  std::uint64_t seed);

// Collapsed, blank-free rendering of a latent phone sequence in spec's
// inventory. For a foreign utterance this is its oracle transliteration.
std::string RenderPhones(const std::vector<int> &phones,
                         const SynthLanguageSpec &spec);

struct CorpusOptions {
  std::size_t num_utts = 0;
  std::size_t min_len = 10;
  std::size_t max_len = 60;
  std::string split = "train";  // part of every utt_id
  std::size_t jobs = 1;
};

// Writes feats/<utt>.xlft and manifest.jsonl under out_dir and returns the
// manifest. Deterministic in spec.seed and options (not in jobs).
CorpusManifest GenerateCorpus(const SynthLanguageSpec &spec,
                              const CorpusOptions &options,
                              const std::filesystem::path &out_dir);

struct ToyAcousticModel {
  LangId lang_id;
  Matrix hidden_weights;   // hidden x feature_dim
  std::vector<double> hidden_bias;
  Matrix output_weights;   // inventory x hidden
  std::vector<double> output_bias;

  std::size_t feature_dim() const { return hidden_weights.cols(); }
  std::size_t output_dim() const { return output_weights.rows(); }

  friend bool operator==(const ToyAcousticModel &, const ToyAcousticModel &) = default;
};

struct ToyAmOptions {
  std::size_t epochs = 30;
  double learning_rate = 0.05;
  std::size_t hidden_dim = 32;
  std::size_t batch_frames = 32;
  std::uint64_t seed = 0;
};

struct ToyAmResult {
  ToyAcousticModel model;
  double train_frame_accuracy = 0.0;
};

// Cross-entropy SGD on per-frame labels (record.frame_labels). Throws on an
// empty manifest or a record without labels.
ToyAmResult TrainToyAm(const CorpusManifest &manifest,
                       const TokenInventory &inventory,
                       const ToyAmOptions &options);

// T x inventory posteriors for one utterance.
PosteriorSequence ApplyToyAm(const ToyAcousticModel &model,
                             const FeatureSequence &features);

// Fraction of frames whose argmax equals record.frame_labels.
double FrameAccuracy(const ToyAcousticModel &model,
                     const CorpusManifest &manifest);

// Accuracy of `model` (trained for `model_spec`) against the latent phones of
// another language's audio, each phone spelled with model_spec's tokens.
// Phones outside model_spec's phone range are skipped.
double CrossFrameAccuracy(const ToyAcousticModel &model,
                          const SynthLanguageSpec &model_spec,
                          const CorpusManifest &foreign);

// One <utt_id>.xlpo per record under out_dir; returns the written paths.
std::vector<std::filesystem::path> EmitPosteriors(
    const ToyAcousticModel &model, const CorpusManifest &manifest,
    const std::filesystem::path &out_dir, std::size_t jobs = 1);

std::string SerializeToyAm(const ToyAcousticModel &model);
ToyAcousticModel ParseToyAm(std::string_view text);
void SaveToyAm(const ToyAcousticModel &model, const std::filesystem::path &path);
ToyAcousticModel LoadToyAm(const std::filesystem::path &path);

// ---------------------------------------------------------------------------
// Whole-fixture description, as read from a JSON spec file.

struct SynthLanguageConfig {
  LangId lang_id;
  std::vector<std::string> tokens;  // index 0 is the blank
  std::uint64_t means_seed = 0;     // equal seeds => related languages
  std::uint64_t map_seed = 0;
  std::uint64_t corpus_seed = 0;
  std::size_t train_utts = 200;
  std::size_t test_utts = 50;
};

struct SynthFixtureConfig {
  std::size_t feature_dim = 8;
  double emission_stddev = 0.5;
  std::size_t min_len = 10;
  std::size_t max_len = 60;
  ToyAmOptions am;
  std::vector<SynthLanguageConfig> languages;
};

SynthFixtureConfig ParseFixtureConfig(std::string_view json_text);
SynthFixtureConfig LoadFixtureConfig(const std::filesystem::path &path);
std::string SerializeFixtureConfig(const SynthFixtureConfig &config);
// Three languages: "tgt", "rel" (shares tgt's acoustics), "unr" (unrelated).
SynthFixtureConfig DemoFixtureConfig();

// Throws kInvalidArgument on any inconsistency; nothing is written.
std::vector<SynthLanguageSpec> BuildLanguageSpecs(const SynthFixtureConfig &config);

struct FixtureLayout {
  std::filesystem::path root;

  std::filesystem::path LangDir(const LangId &lang) const { return root / lang; }
  std::filesystem::path Inventory(const LangId &lang) const {
    return LangDir(lang) / "inventory.jsonl";
  }
  std::filesystem::path Manifest(const LangId &lang, const std::string &split) const {
    return LangDir(lang) / split / "manifest.jsonl";
  }
  std::filesystem::path AcousticModel(const LangId &lang) const {
    return LangDir(lang) / "am.json";
  }
  // Posteriors of `audio_lang`'s `split` audio computed by `model_lang`'s AM.
  std::filesystem::path Posteriors(const LangId &audio_lang, const std::string &split,
                                   const LangId &model_lang) const {
    return root / "posteriors" / audio_lang / split / model_lang;
  }
};

struct FixtureSummary {
  std::map<LangId, double> train_accuracy;
  std::map<LangId, double> test_accuracy;
  // [model_lang][audio_lang] latent-phone accuracy on the test split.
  std::map<LangId, std::map<LangId, double>> cross_accuracy;
};

// Generates corpora, trains every toy AM, and emits posteriors for every
// (audio language, split, model language) combination.
FixtureSummary BuildFixture(const SynthFixtureConfig &config,
                            const std::filesystem::path &root,
                            std::size_t jobs = 1);

}  // namespace xling

#endif  // XLING_SYNTH_FIXTURE_H_
