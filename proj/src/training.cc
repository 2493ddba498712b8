// SPDX-License-Identifier: Apache-2.0
#include "xling/training.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "byte_io.h"
#include "json.hpp"
#include "seed.h"
#include "xling/error.h"
#include "xling/numerics.h"
#include "xling/parallel.h"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace xling {
namespace {

constexpr std::string_view kTrainStateMagic = "XLTS";
constexpr std::uint16_t kTrainStateVersion = 1;

std::string Trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T ParseNumber(const std::string &key, const std::string &value) {
  std::istringstream in(value);
  T out{};
  in >> out;
  if (in.fail() || !in.eof())
    Fail(ErrorKind::kInvalidArgument, "bad value for " + key + ": '" + value + "'");
  return out;
}

struct Pair {
  std::size_t utt;
  const LangId *lang;
};

std::vector<Pair> EnumeratePairs(std::span<const PairedUtterance> batch) {
  std::vector<Pair> pairs;
  for (std::size_t u = 0; u < batch.size(); ++u)
    for (const auto &[lang, seq] : batch[u].sources) pairs.push_back({u, &lang});
  return pairs;
}

void Axpy(double a, const MesdModel &x, MesdModel *y) {
  auto xs = ParameterTensors(x);
  auto ys = ParameterTensors(*y);
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t k = 0; k < xs[i].values.size(); ++k) ys[i].values[k] += a * xs[i].values[k];
}

void OptimizerStep(const TrainConfig &config, const MesdModel &grads, TrainState *state) {
  auto params = ParameterTensors(state->model);
  auto g = ParameterTensors(grads);
  if (config.optimizer == OptimizerKind::kSgd) {
    for (std::size_t i = 0; i < params.size(); ++i)
      for (std::size_t k = 0; k < params[i].values.size(); ++k)
        params[i].values[k] -= config.learning_rate * g[i].values[k];
    ++state->step;
    return;
  }
  ++state->step;
  auto m = ParameterTensors(state->adam_m);
  auto v = ParameterTensors(state->adam_v);
  const double t = static_cast<double>(state->step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (std::size_t k = 0; k < params[i].values.size(); ++k) {
      const double gk = g[i].values[k];
      double &mk = m[i].values[k];
      double &vk = v[i].values[k];
      mk = config.beta1 * mk + (1.0 - config.beta1) * gk;
      vk = config.beta2 * vk + (1.0 - config.beta2) * gk * gk;
      params[i].values[k] -=
          config.learning_rate * (mk / c1) / (std::sqrt(vk / c2) + config.epsilon);
    }
  }
}

std::vector<PairedUtterance> Select(std::span<const PairedUtterance> corpus,
                                    const std::vector<std::size_t> &idx) {
  std::vector<PairedUtterance> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(corpus[i]);
  return out;
}

void CheckFinite(double loss, std::size_t epoch) {
  if (!std::isfinite(loss))
    Fail(ErrorKind::kNumeric, "non-finite loss in epoch " + std::to_string(epoch));
}

ordered_json RecordToJson(const EpochRecord &r) {
  ordered_json j;
  j["epoch"] = r.epoch;
  j["train_loss"] = r.train_loss;
  j["dev_loss"] = r.dev_loss;
  j["dev_language_loss"] = r.dev_language_loss;
  j["dev_weights"] = r.dev_weights;
  j["train_weights"] = r.train_weights;
  return j;
}

EpochRecord RecordFromJson(const json &j) {
  EpochRecord r;
  r.epoch = j.at("epoch").get<std::size_t>();
  r.train_loss = j.at("train_loss").get<double>();
  r.dev_loss = j.at("dev_loss").get<double>();
  r.dev_language_loss = j.at("dev_language_loss").get<std::map<LangId, double>>();
  r.dev_weights = j.at("dev_weights").get<std::map<LangId, double>>();
  r.train_weights = j.at("train_weights").get<std::map<LangId, double>>();
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------

void ValidateTrainConfig(const TrainConfig &c) {
  if (c.epochs < 1) Fail(ErrorKind::kInvalidArgument, "epochs must be >= 1");
  if (c.batch_size < 1) Fail(ErrorKind::kInvalidArgument, "batch_size must be >= 1");
  if (!(c.learning_rate >= 0.0) || !std::isfinite(c.learning_rate))
    Fail(ErrorKind::kInvalidArgument, "learning_rate must be >= 0");
  if (!(c.dev_fraction >= 0.0 && c.dev_fraction < 1.0))
    Fail(ErrorKind::kInvalidArgument, "dev_fraction must be in [0, 1)");
  if (!(c.beta1 >= 0.0 && c.beta1 < 1.0) || !(c.beta2 >= 0.0 && c.beta2 < 1.0) ||
      !(c.epsilon > 0.0))
    Fail(ErrorKind::kInvalidArgument, "invalid Adam hyperparameters");
  if (!std::isfinite(c.clip_norm)) Fail(ErrorKind::kInvalidArgument, "clip_norm must be finite");
}

std::string_view WeightingName(WeightingMode mode) {
  return mode == WeightingMode::kMean ? "mean" : "rank_sum";
}

WeightingMode ParseWeighting(std::string_view name) {
  if (name == "mean") return WeightingMode::kMean;
  if (name == "rank_sum") return WeightingMode::kRankSum;
  Fail(ErrorKind::kInvalidArgument, "unknown weighting '" + std::string(name) + "'");
}

std::string_view OptimizerName(OptimizerKind kind) {
  return kind == OptimizerKind::kSgd ? "sgd" : "adam";
}

OptimizerKind ParseOptimizer(std::string_view name) {
  if (name == "sgd") return OptimizerKind::kSgd;
  if (name == "adam") return OptimizerKind::kAdam;
  Fail(ErrorKind::kInvalidArgument, "unknown optimizer '" + std::string(name) + "'");
}

TrainConfig ParseTrainConfig(std::string_view text, TrainConfig c) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    if (Trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      Fail(ErrorKind::kInvalidArgument, "config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = Trim(std::string_view(line).substr(0, eq));
    const std::string value = Trim(std::string_view(line).substr(eq + 1));
    if (key == "epochs") c.epochs = ParseNumber<std::size_t>(key, value);
    else if (key == "batch_size") c.batch_size = ParseNumber<std::size_t>(key, value);
    else if (key == "learning_rate") c.learning_rate = ParseNumber<double>(key, value);
    else if (key == "optimizer") c.optimizer = ParseOptimizer(value);
    else if (key == "beta1") c.beta1 = ParseNumber<double>(key, value);
    else if (key == "beta2") c.beta2 = ParseNumber<double>(key, value);
    else if (key == "epsilon") c.epsilon = ParseNumber<double>(key, value);
    else if (key == "weighting") c.weighting = ParseWeighting(value);
    else if (key == "clip_norm") c.clip_norm = ParseNumber<double>(key, value);
    else if (key == "seed") c.seed = ParseNumber<std::uint64_t>(key, value);
    else if (key == "dev_fraction") c.dev_fraction = ParseNumber<double>(key, value);
    else if (key == "jobs") c.jobs = ParseNumber<std::size_t>(key, value);
    else Fail(ErrorKind::kInvalidArgument, "unknown config key '" + key + "'");
  }
  ValidateTrainConfig(c);
  return c;
}

std::string SerializeTrainConfig(const TrainConfig &c) {
  std::ostringstream out;
  out.precision(17);
  out << "epochs = " << c.epochs << "\n"
      << "batch_size = " << c.batch_size << "\n"
      << "learning_rate = " << c.learning_rate << "\n"
      << "optimizer = " << OptimizerName(c.optimizer) << "\n"
      << "beta1 = " << c.beta1 << "\n"
      << "beta2 = " << c.beta2 << "\n"
      << "epsilon = " << c.epsilon << "\n"
      << "weighting = " << WeightingName(c.weighting) << "\n"
      << "clip_norm = " << c.clip_norm << "\n"
      << "seed = " << c.seed << "\n"
      << "dev_fraction = " << c.dev_fraction << "\n";
  return out.str();
}

// ---------------------------------------------------------------------------

double WeightingState::WeightedLoss() const {
  double total = 0.0;
  for (const auto &l : languages) total += l.weight * l.loss;
  return total;
}

std::map<LangId, double> WeightingState::Weights() const {
  std::map<LangId, double> out;
  for (const auto &l : languages) out[l.lang] = l.weight;
  return out;
}

std::map<LangId, double> WeightingState::Losses() const {
  std::map<LangId, double> out;
  for (const auto &l : languages) out[l.lang] = l.loss;
  return out;
}

WeightingState ComputeWeighting(const std::map<LangId, double> &losses, WeightingMode mode) {
  if (losses.empty()) Fail(ErrorKind::kInvalidArgument, "no language losses to weight");
  WeightingState state;
  for (const auto &[lang, loss] : losses) {
    if (!std::isfinite(loss))
      Fail(ErrorKind::kNumeric, "non-finite loss for language " + lang);
    state.languages.push_back({lang, loss, 0, 0.0});
  }
  // Map order is ascending lang_id, so a stable sort leaves ties in that order.
  std::vector<std::size_t> order(state.languages.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return state.languages[a].loss > state.languages[b].loss;
  });
  const double K = static_cast<double>(state.languages.size());
  for (std::size_t r = 0; r < order.size(); ++r) {
    auto &l = state.languages[order[r]];
    l.rank = r + 1;
    l.weight = mode == WeightingMode::kMean
                   ? 1.0 / K
                   : 2.0 * (K + 1.0 - static_cast<double>(l.rank)) / (K * (K + 1.0));
  }
  return state;
}

std::map<LangId, double> RankSumWeights(const std::map<LangId, double> &losses) {
  return ComputeWeighting(losses, WeightingMode::kRankSum).Weights();
}

void ValidatePaired(const PairedUtterance &utt) {
  if (utt.sources.empty())
    Fail(ErrorKind::kInvalidArgument, "utterance " + utt.utt_id + " has no source posteriors");
  for (const auto &[lang, seq] : utt.sources)
    if (seq.num_frames() != utt.target.num_frames())
      Fail(ErrorKind::kFrameMismatch, "frame count mismatch for " + utt.utt_id + " source " +
                                          lang);
}

BatchLoss ComputeBatchLoss(const MesdModel &model, std::span<const PairedUtterance> batch,
                           WeightingMode weighting, std::size_t jobs) {
  for (const auto &u : batch) ValidatePaired(u);
  const auto pairs = EnumeratePairs(batch);
  std::vector<MesdModel> grads(pairs.size());
  std::vector<double> sums(pairs.size());
  ParallelFor(pairs.size(), jobs, [&](std::size_t i) {
    const auto &u = batch[pairs[i].utt];
    grads[i] = ZerosLike(model);
    sums[i] = AccumulateGradients(model, *pairs[i].lang, u.sources.at(*pairs[i].lang), u.target,
                                  1.0, &grads[i]);
  });

  BatchLoss out;
  std::map<LangId, double> sum_by_lang;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    sum_by_lang[*pairs[i].lang] += sums[i];
    out.frames[*pairs[i].lang] += batch[pairs[i].utt].target.num_frames();
  }
  std::map<LangId, double> losses;
  for (const auto &[lang, sum] : sum_by_lang)
    losses[lang] = sum / static_cast<double>(out.frames[lang]);
  out.weighting = ComputeWeighting(losses, weighting);
  out.total = out.weighting.WeightedLoss();

  const auto weights = out.weighting.Weights();
  out.gradients = ZerosLike(model);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const LangId &lang = *pairs[i].lang;
    Axpy(weights.at(lang) / static_cast<double>(out.frames.at(lang)), grads[i], &out.gradients);
  }
  return out;
}

WeightingState EvaluateLoss(const MesdModel &model, std::span<const PairedUtterance> data,
                            WeightingMode weighting, std::size_t jobs) {
  for (const auto &u : data) ValidatePaired(u);
  const auto pairs = EnumeratePairs(data);
  std::vector<double> sums(pairs.size());
  ParallelFor(pairs.size(), jobs, [&](std::size_t i) {
    const auto &u = data[pairs[i].utt];
    const auto mapped = Forward(model, *pairs[i].lang, u.sources.at(*pairs[i].lang));
    double sum = 0.0;
    for (std::size_t t = 0; t < u.target.num_frames(); ++t)
      sum += KlDivergenceFrame(u.target.frames.row(t), mapped.posteriors.frames.row(t));
    sums[i] = sum;
  });
  std::map<LangId, double> sum_by_lang;
  std::map<LangId, std::size_t> frames;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    sum_by_lang[*pairs[i].lang] += sums[i];
    frames[*pairs[i].lang] += data[pairs[i].utt].target.num_frames();
  }
  std::map<LangId, double> losses;
  for (const auto &[lang, sum] : sum_by_lang)
    losses[lang] = sum / static_cast<double>(frames[lang]);
  return ComputeWeighting(losses, weighting);
}

double ClipGradients(MesdModel *gradients, double max_norm) {
  double sq = 0.0;
  for (const auto &t : ParameterTensors(*gradients))
    for (double v : t.values) sq += v * v;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (auto &t : ParameterTensors(*gradients))
      for (double &v : t.values) v *= s;
  }
  return norm;
}

std::string HistoryToJsonl(const std::vector<EpochRecord> &history) {
  std::string out;
  for (const auto &r : history) out += RecordToJson(r).dump() + "\n";
  return out;
}

DataSplit SplitCorpus(std::size_t n, double dev_fraction, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(detail::MixSeed(seed, detail::HashString("dev-split")));
  std::shuffle(idx.begin(), idx.end(), rng);
  std::size_t dev = static_cast<std::size_t>(std::llround(dev_fraction * static_cast<double>(n)));
  if (dev_fraction > 0.0 && dev == 0 && n >= 2) dev = 1;
  if (dev >= n) dev = n > 0 ? n - 1 : 0;
  DataSplit split;
  split.dev.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(dev));
  split.train.assign(idx.begin() + static_cast<std::ptrdiff_t>(dev), idx.end());
  std::sort(split.dev.begin(), split.dev.end());
  std::sort(split.train.begin(), split.train.end());
  return split;
}

TrainState StartTraining(const MesdModel &model, std::span<const PairedUtterance> corpus,
                         const TrainConfig &config) {
  ValidateTrainConfig(config);
  if (corpus.empty()) Fail(ErrorKind::kInvalidArgument, "empty training corpus");
  const auto split = SplitCorpus(corpus.size(), config.dev_fraction, config.seed);
  const auto train = Select(corpus, split.train);
  const auto dev = split.dev.empty() ? train : Select(corpus, split.dev);

  TrainState state;
  state.model = model;
  state.adam_m = ZerosLike(model);
  state.adam_v = ZerosLike(model);
  state.best_model = model;

  EpochRecord r;
  r.epoch = 0;
  r.train_loss = EvaluateLoss(model, train, config.weighting, config.jobs).WeightedLoss();
  const auto dev_state = EvaluateLoss(model, dev, config.weighting, config.jobs);
  r.dev_loss = dev_state.WeightedLoss();
  r.dev_language_loss = dev_state.Losses();
  r.dev_weights = dev_state.Weights();
  CheckFinite(r.dev_loss, 0);
  state.best_dev_loss = r.dev_loss;
  state.best_epoch = 0;
  state.history.push_back(std::move(r));
  return state;
}

void ContinueTraining(TrainState *state, std::span<const PairedUtterance> corpus,
                      const TrainConfig &config) {
  ValidateTrainConfig(config);
  if (corpus.empty()) Fail(ErrorKind::kInvalidArgument, "empty training corpus");
  const auto split = SplitCorpus(corpus.size(), config.dev_fraction, config.seed);
  const auto train = Select(corpus, split.train);
  const auto dev = split.dev.empty() ? train : Select(corpus, split.dev);

  std::vector<std::size_t> order(train.size());
  while (state->epochs_done < config.epochs) {
    const std::size_t epoch = state->epochs_done + 1;
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(detail::MixSeed(config.seed, epoch));
    std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    std::size_t batches = 0;
    std::map<LangId, double> weight_sum;
    std::vector<PairedUtterance> batch;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      batch.clear();
      for (std::size_t i = start; i < std::min(order.size(), start + config.batch_size); ++i)
        batch.push_back(train[order[i]]);
      auto bl = ComputeBatchLoss(state->model, batch, config.weighting, config.jobs);
      CheckFinite(bl.total, epoch);
      ClipGradients(&bl.gradients, config.clip_norm);
      OptimizerStep(config, bl.gradients, state);
      loss_sum += bl.total;
      ++batches;
      for (const auto &[lang, w] : bl.weighting.Weights()) weight_sum[lang] += w;
    }

    EpochRecord r;
    r.epoch = epoch;
    r.train_loss = loss_sum / static_cast<double>(batches);
    for (const auto &[lang, w] : weight_sum) r.train_weights[lang] = w / static_cast<double>(batches);
    const auto dev_state = EvaluateLoss(state->model, dev, config.weighting, config.jobs);
    r.dev_loss = dev_state.WeightedLoss();
    r.dev_language_loss = dev_state.Losses();
    r.dev_weights = dev_state.Weights();
    CheckFinite(r.dev_loss, epoch);
    if (r.dev_loss < state->best_dev_loss) {
      state->best_dev_loss = r.dev_loss;
      state->best_epoch = epoch;
      state->best_model = state->model;
    }
    state->history.push_back(std::move(r));
    state->epochs_done = epoch;
  }
}

TrainState Train(const MesdModel &model, std::span<const PairedUtterance> corpus,
                 const TrainConfig &config) {
  auto state = StartTraining(model, corpus, config);
  ContinueTraining(&state, corpus, config);
  return state;
}

// ---------------------------------------------------------------------------

std::string EncodeTrainState(const TrainState &s) {
  detail::ByteWriter w;
  w.Bytes(kTrainStateMagic);
  w.U16(kTrainStateVersion);
  w.U32(static_cast<std::uint32_t>(s.epochs_done));
  w.U32(static_cast<std::uint32_t>(s.best_epoch));
  w.F64(s.best_dev_loss);
  w.U64(s.step);
  for (const MesdModel *m : {&s.model, &s.adam_m, &s.adam_v, &s.best_model}) {
    const std::string ck = EncodeCheckpoint(*m);
    w.U32(static_cast<std::uint32_t>(ck.size()));
    w.Bytes(ck);
  }
  const std::string hist = HistoryToJsonl(s.history);
  w.U32(static_cast<std::uint32_t>(hist.size()));
  w.Bytes(hist);
  const std::string body = w.buffer();
  w.U32(detail::Crc32(body));
  return w.buffer();
}

TrainState DecodeTrainState(std::string_view bytes) {
  detail::ByteReader r(bytes);
  if (bytes.size() < kTrainStateMagic.size() ||
      r.Bytes(kTrainStateMagic.size()) != kTrainStateMagic)
    Fail(ErrorKind::kBadMagic, "magic mismatch: not a training state");
  if (bytes.size() < 4 + kTrainStateMagic.size()) Fail(ErrorKind::kTruncated, "truncated");
  const std::string_view body = bytes.substr(0, bytes.size() - 4);
  detail::ByteReader tail(bytes.substr(bytes.size() - 4));
  if (tail.U32() != detail::Crc32(body))
    Fail(ErrorKind::kCorruptCheckpoint, "corrupt checkpoint: training state checksum mismatch");
  if (r.U16() != kTrainStateVersion)
    Fail(ErrorKind::kCorruptCheckpoint, "corrupt checkpoint: unsupported training state version");
  TrainState s;
  s.epochs_done = r.U32();
  s.best_epoch = r.U32();
  s.best_dev_loss = r.F64();
  s.step = r.U64();
  for (MesdModel *m : {&s.model, &s.adam_m, &s.adam_v, &s.best_model}) {
    const std::size_t n = r.U32();
    *m = DecodeCheckpoint(r.Bytes(n));
  }
  const std::size_t n = r.U32();
  std::istringstream in{std::string(r.Bytes(n))};
  std::string line;
  try {
    while (std::getline(in, line))
      if (!line.empty()) s.history.push_back(RecordFromJson(json::parse(line)));
  } catch (const json::exception &e) {
    Fail(ErrorKind::kCorruptCheckpoint, std::string("corrupt checkpoint: history: ") + e.what());
  }
  return s;
}

void SaveTrainState(const TrainState &state, const fs::path &path) {
  detail::WriteFileBytes(path, EncodeTrainState(state));
}

TrainState LoadTrainState(const fs::path &path) {
  return DecodeTrainState(detail::ReadFileBytes(path));
}

std::vector<PairedUtterance> PairPosteriorDirs(const fs::path &target_dir,
                                               const std::map<LangId, fs::path> &source_dirs) {
  if (source_dirs.empty()) Fail(ErrorKind::kInvalidArgument, "no source posterior directories");
  for (const auto &[lang, dir] : source_dirs)
    if (!fs::is_directory(dir))
      Fail(ErrorKind::kMissingFile, "missing file: source directory " + dir.string() +
                                        " for language " + lang);
  auto targets = ReadPosteriorDir(target_dir);
  if (targets.empty())
    Fail(ErrorKind::kMissingFile, "missing file: no posteriors in " + target_dir.string());
  std::vector<PairedUtterance> out;
  for (auto &[utt, seq] : targets) {
    PairedUtterance p{utt, std::move(seq), {}};
    for (const auto &[lang, dir] : source_dirs) {
      const auto path = PosteriorPath(dir, utt);
      if (!fs::exists(path))
        Fail(ErrorKind::kMissingFile, "missing file: " + path.string() + " (utt " + utt + ")");
      p.sources.emplace(lang, ReadPosteriors(path));
    }
    ValidatePaired(p);
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace xling
