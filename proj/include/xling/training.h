// SPDX-License-Identifier: Apache-2.0
/**
 * @file   training.h
 * @brief  Training loop for the mapping network.
 *
 * Each source language k contributes a frame-averaged KL loss L_k between the
 * target acoustic model's posteriors and the mapped posteriors for the same
 * target-language audio. The batch objective is sum_k w_k * L_k with either
 * w_k = 1/K or rank-sum weights w_r = 2(K+1-r) / (K(K+1)), where rank 1 is
 * the language with the largest loss in the current batch. Weights are
 * treated as constants when differentiating.
 */
#ifndef XLING_TRAINING_H_
#define XLING_TRAINING_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "xling/mesd_model.h"
#include "xling/posterior_io.h"

namespace xling {

enum class OptimizerKind { kSgd, kAdam };
enum class WeightingMode { kMean, kRankSum };

struct TrainConfig {
  std::size_t epochs = 20;
  std::size_t batch_size = 8;
  double learning_rate = 1e-3;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  WeightingMode weighting = WeightingMode::kRankSum;
  double clip_norm = 5.0;  // <= 0 disables clipping
  std::uint64_t seed = 0;
  double dev_fraction = 1.0 / 30.0;
  std::size_t jobs = 1;
};

// Throws kInvalidArgument when an invariant fails.
void ValidateTrainConfig(const TrainConfig &config);

// `key = value` lines, '#' comments. Keys mirror the TrainConfig fields;
// optimizer is sgd|adam, weighting is mean|rank_sum. Unknown keys throw.
TrainConfig ParseTrainConfig(std::string_view text, TrainConfig base = {});
std::string SerializeTrainConfig(const TrainConfig &config);

std::string_view WeightingName(WeightingMode mode);
WeightingMode ParseWeighting(std::string_view name);
std::string_view OptimizerName(OptimizerKind kind);
OptimizerKind ParseOptimizer(std::string_view name);

struct LanguageWeight {
  LangId lang;
  double loss = 0.0;
  std::size_t rank = 0;  // 1 = largest loss
  double weight = 0.0;
};

struct WeightingState {
  std::vector<LanguageWeight> languages;  // ascending lang_id

  std::size_t K() const { return languages.size(); }
  double WeightedLoss() const;
  std::map<LangId, double> Weights() const;
  std::map<LangId, double> Losses() const;
};

// Ranks by descending loss, ties by ascending lang_id, and assigns
// 2(K+1-r)/(K(K+1)). Throws on an empty map or non-finite losses.
std::map<LangId, double> RankSumWeights(const std::map<LangId, double> &losses);
WeightingState ComputeWeighting(const std::map<LangId, double> &losses, WeightingMode mode);

// All sequences come from the same target-language utterance.
struct PairedUtterance {
  std::string utt_id;
  PosteriorSequence target;                       // from the target AM
  std::map<LangId, PosteriorSequence> sources;    // from each source AM
};

void ValidatePaired(const PairedUtterance &utt);

struct BatchLoss {
  double total = 0.0;  // L_A
  WeightingState weighting;
  std::map<LangId, std::size_t> frames;
  MesdModel gradients;
};

// Per-language loss = summed frame KL over the batch / frames in the batch.
BatchLoss ComputeBatchLoss(const MesdModel &model, std::span<const PairedUtterance> batch,
                           WeightingMode weighting, std::size_t jobs = 1);

// Loss only, no gradients.
WeightingState EvaluateLoss(const MesdModel &model, std::span<const PairedUtterance> data,
                            WeightingMode weighting, std::size_t jobs = 1);

// Rescales `gradients` in place to global L2 norm <= max_norm; returns the
// norm before clipping.
double ClipGradients(MesdModel *gradients, double max_norm);

struct EpochRecord {
  std::size_t epoch = 0;  // 0 = before training
  double train_loss = 0.0;
  double dev_loss = 0.0;
  std::map<LangId, double> dev_language_loss;
  std::map<LangId, double> dev_weights;
  std::map<LangId, double> train_weights;  // mean over the epoch's batches
};

std::string HistoryToJsonl(const std::vector<EpochRecord> &history);

struct TrainState {
  MesdModel model;        // parameters after `epochs_done` epochs
  MesdModel adam_m, adam_v;
  std::uint64_t step = 0;
  std::size_t epochs_done = 0;
  MesdModel best_model;
  double best_dev_loss = 0.0;
  std::size_t best_epoch = 0;
  std::vector<EpochRecord> history;
};

struct DataSplit {
  std::vector<std::size_t> train, dev;
};

// Seeded shuffle; dev gets round(dev_fraction * N) utterances (at least one
// when dev_fraction > 0 and N >= 2). Train is never empty.
DataSplit SplitCorpus(std::size_t n, double dev_fraction, std::uint64_t seed);

// Evaluates the initial model (epoch 0 of the history).
TrainState StartTraining(const MesdModel &model, std::span<const PairedUtterance> corpus,
                         const TrainConfig &config);

// Continues `state` until config.epochs epochs are done. The same seed,
// config and corpus give bit-identical results whether or not training was
// interrupted and resumed. Throws kNumeric on a non-finite loss.
void ContinueTraining(TrainState *state, std::span<const PairedUtterance> corpus,
                      const TrainConfig &config);

// StartTraining + ContinueTraining.
TrainState Train(const MesdModel &model, std::span<const PairedUtterance> corpus,
                 const TrainConfig &config);

std::string EncodeTrainState(const TrainState &state);
TrainState DecodeTrainState(std::string_view bytes);
void SaveTrainState(const TrainState &state, const std::filesystem::path &path);
TrainState LoadTrainState(const std::filesystem::path &path);

// Pairs every target posterior file with each source's file of the same
// utt_id. Missing source files throw kMissingFile.
std::vector<PairedUtterance> PairPosteriorDirs(
    const std::filesystem::path &target_dir,
    const std::map<LangId, std::filesystem::path> &source_dirs);

}  // namespace xling

#endif  // XLING_TRAINING_H_
