// SPDX-License-Identifier: Apache-2.0
#include "xling/synth_fixture.h"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <set>

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

void InitUniform(Matrix *m, std::mt19937_64 &rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(m->cols()));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double &v : m->values()) v = dist(rng);
}

// Hidden activations and output posteriors for one feature row.
void ToyForward(const ToyAcousticModel &m, std::span<const double> x,
                std::span<double> hidden, std::span<double> out) {
  std::copy(m.hidden_bias.begin(), m.hidden_bias.end(), hidden.begin());
  AddMatVec(m.hidden_weights, x, hidden);
  for (double &h : hidden) h = std::tanh(h);
  std::copy(m.output_bias.begin(), m.output_bias.end(), out.begin());
  AddMatVec(m.output_weights, hidden, out);
  SoftmaxInPlace(out);
}

ordered_json MatrixToJson(const Matrix &m) {
  ordered_json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  j["data"] = std::vector<double>(m.values().begin(), m.values().end());
  return j;
}

Matrix MatrixFromJson(const json &j) {
  return Matrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
                j.at("data").get<std::vector<double>>());
}

void CheckKeys(const json &obj, std::initializer_list<std::string_view> allowed,
               const std::string &where) {
  for (const auto &[key, value] : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) Fail(ErrorKind::kInvalidArgument, where + ": unknown key '" + key + "'");
  }
}

}  // namespace

void ValidateSpec(const SynthLanguageSpec &spec) {
  const std::string where = "language " + spec.lang_id;
  if (spec.lang_id.empty()) Fail(ErrorKind::kInvalidArgument, "language without lang_id");
  if (spec.num_latent_phones < 2)
    Fail(ErrorKind::kInvalidArgument, where + ": need at least 2 latent phones");
  if (spec.phone_to_token.size() != static_cast<std::size_t>(spec.num_latent_phones))
    Fail(ErrorKind::kInvalidArgument, where + ": phone_to_token must cover every phone");
  for (int t : spec.phone_to_token)
    if (t < 0 || static_cast<std::size_t>(t) >= spec.inventory.size())
      Fail(ErrorKind::kInvalidArgument, where + ": phone_to_token out of inventory range");
  if (spec.emission_means.rows() != static_cast<std::size_t>(spec.num_latent_phones) ||
      spec.emission_means.cols() < 1)
    Fail(ErrorKind::kDimensionMismatch, where + ": emission_means shape");
  if (!(spec.emission_stddev > 0.0) || !std::isfinite(spec.emission_stddev))
    Fail(ErrorKind::kInvalidArgument, where + ": emission_stddev must be > 0");
}

Matrix DrawEmissionMeans(int num_phones, std::size_t feature_dim, std::uint64_t seed,
                         double min_separation, double range) {
  std::mt19937_64 rng(detail::MixSeed(seed, 0x4D45414EULL));
  std::uniform_real_distribution<double> dist(-range, range);
  Matrix means(static_cast<std::size_t>(num_phones), feature_dim);
  for (std::size_t p = 0; p < means.rows(); ++p) {
    for (int attempt = 0;; ++attempt) {
      if (attempt > 100000)
        Fail(ErrorKind::kInvalidArgument, "cannot place separated emission means");
      for (double &v : means.row(p)) v = dist(rng);
      bool separated = true;
      for (std::size_t q = 0; q < p && separated; ++q) {
        double d2 = 0.0;
        for (std::size_t k = 0; k < feature_dim; ++k) {
          const double diff = means(p, k) - means(q, k);
          d2 += diff * diff;
        }
        separated = std::sqrt(d2) >= min_separation;
      }
      if (separated) break;
    }
  }
  return means;
}

std::vector<int> DrawPhoneToToken(const TokenInventory &inventory, std::uint64_t seed) {
  std::vector<int> non_blank;
  for (std::size_t i = 0; i < inventory.size(); ++i)
    if (i != inventory.blank_index()) non_blank.push_back(static_cast<int>(i));
  std::mt19937_64 rng(detail::MixSeed(seed, 0x4D4150ULL));
  std::shuffle(non_blank.begin(), non_blank.end(), rng);
  std::vector<int> map{static_cast<int>(inventory.blank_index())};
  map.insert(map.end(), non_blank.begin(), non_blank.end());
  return map;
}

std::string RenderPhones(const std::vector<int> &phones, const SynthLanguageSpec &spec) {
  std::vector<std::size_t> ids;
  ids.reserve(phones.size());
  for (int p : phones) {
    if (p < 0 || p >= spec.num_latent_phones)
      Fail(ErrorKind::kInvalidArgument, "phone outside " + spec.lang_id + " phone set");
    ids.push_back(static_cast<std::size_t>(spec.phone_to_token[static_cast<std::size_t>(p)]));
  }
  return spec.inventory.Detokenize(
      CollapseRepeatsAndBlanks(ids, spec.inventory.blank_index()));
}

CorpusManifest GenerateCorpus(const SynthLanguageSpec &spec, const CorpusOptions &options,
                              const fs::path &out_dir) {
  ValidateSpec(spec);
  if (options.min_len < 1 || options.min_len > options.max_len)
    Fail(ErrorKind::kInvalidArgument, "need 1 <= min_len <= max_len");
  CorpusManifest manifest;
  manifest.records.resize(options.num_utts);
  const std::uint64_t split_seed =
      detail::MixSeed(spec.seed, detail::HashString(options.split));
  const int phones = spec.num_latent_phones;
  fs::create_directories(out_dir / "feats");

  ParallelFor(options.num_utts, options.jobs, [&](std::size_t u) {
    std::mt19937_64 rng(detail::MixSeed(split_seed, u));
    std::uniform_int_distribution<std::size_t> len_dist(options.min_len, options.max_len);
    // Utterances open on a non-silence phone so every transcript is non-empty.
    std::uniform_int_distribution<int> first_dist(1, phones - 1);
    std::uniform_int_distribution<int> other_dist(0, phones - 2);
    std::bernoulli_distribution stay(kSelfTransition);
    std::normal_distribution<double> noise(0.0, spec.emission_stddev);

    const std::size_t len = len_dist(rng);
    ManifestRecord &r = manifest.records[u];
    char id[64];
    std::snprintf(id, sizeof(id), "%s_%s_%04zu", spec.lang_id.c_str(),
                  options.split.c_str(), u);
    r.utt_id = id;
    r.lang_id = spec.lang_id;
    r.duration_frames = len;
    r.phones.resize(len);
    int phone = first_dist(rng);
    for (std::size_t t = 0; t < len; ++t) {
      if (t > 0 && !stay(rng)) {
        const int next = other_dist(rng);
        phone = next >= phone ? next + 1 : next;
      }
      r.phones[t] = phone;
    }
    FeatureSequence feats{spec.lang_id, r.utt_id, Matrix(len, spec.feature_dim())};
    for (std::size_t t = 0; t < len; ++t) {
      auto mean = spec.emission_means.row(static_cast<std::size_t>(r.phones[t]));
      auto row = feats.frames.row(t);
      for (std::size_t k = 0; k < row.size(); ++k) row[k] = mean[k] + noise(rng);
    }
    r.frame_labels.resize(len);
    for (std::size_t t = 0; t < len; ++t)
      r.frame_labels[t] = spec.phone_to_token[static_cast<std::size_t>(r.phones[t])];
    r.transcript = RenderPhones(r.phones, spec);
    r.feature_file = fs::absolute(out_dir / "feats" / (r.utt_id + ".xlft"));
    WriteFeatures(feats, r.feature_file);
  });
  SaveManifest(manifest, out_dir / "manifest.jsonl");
  return manifest;
}

// ---------------------------------------------------------------------------

ToyAmResult TrainToyAm(const CorpusManifest &manifest, const TokenInventory &inventory,
                       const ToyAmOptions &options) {
  if (manifest.empty()) Fail(ErrorKind::kInvalidArgument, "empty manifest");
  if (options.hidden_dim < 1 || options.batch_frames < 1)
    Fail(ErrorKind::kInvalidArgument, "toy AM hidden_dim and batch_frames must be >= 1");

  struct Frame {
    std::size_t utt, t;
    std::size_t label;
  };
  std::vector<FeatureSequence> feats;
  std::vector<Frame> frames;
  for (std::size_t u = 0; u < manifest.size(); ++u) {
    const auto &r = manifest.records[u];
    if (r.frame_labels.empty())
      Fail(ErrorKind::kInvalidArgument, "record " + r.utt_id + " has no frame labels");
    feats.push_back(ReadFeatures(r.feature_file));
    if (feats.back().frames.rows() != r.frame_labels.size())
      Fail(ErrorKind::kFrameMismatch, "frame labels do not match features for " + r.utt_id);
    if (feats.back().frames.cols() != feats.front().frames.cols())
      Fail(ErrorKind::kDimensionMismatch, "dimension mismatch: feature dims differ");
    for (std::size_t t = 0; t < r.frame_labels.size(); ++t) {
      const int label = r.frame_labels[t];
      if (label < 0 || static_cast<std::size_t>(label) >= inventory.size())
        Fail(ErrorKind::kInvalidArgument, "label outside inventory in " + r.utt_id);
      frames.push_back({u, t, static_cast<std::size_t>(label)});
    }
  }
  const std::size_t feat_dim = feats.front().frames.cols();
  const std::size_t hidden = options.hidden_dim;
  const std::size_t out_dim = inventory.size();

  ToyAcousticModel m{inventory.lang_id(), Matrix(hidden, feat_dim),
                     std::vector<double>(hidden, 0.0), Matrix(out_dim, hidden),
                     std::vector<double>(out_dim, 0.0)};
  std::mt19937_64 init_rng(detail::MixSeed(options.seed, 0x494E4954ULL));
  InitUniform(&m.hidden_weights, init_rng);
  InitUniform(&m.output_weights, init_rng);

  Matrix g_w1(hidden, feat_dim), g_w2(out_dim, hidden);
  std::vector<double> g_b1(hidden), g_b2(out_dim);
  std::vector<double> h(hidden), y(out_dim), dh(hidden);
  std::vector<std::size_t> order(frames.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    std::mt19937_64 rng(detail::MixSeed(options.seed, epoch + 1));
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += options.batch_frames) {
      const std::size_t end = std::min(order.size(), start + options.batch_frames);
      g_w1.SetZero();
      g_w2.SetZero();
      std::fill(g_b1.begin(), g_b1.end(), 0.0);
      std::fill(g_b2.begin(), g_b2.end(), 0.0);
      for (std::size_t i = start; i < end; ++i) {
        const Frame &f = frames[order[i]];
        auto x = feats[f.utt].frames.row(f.t);
        ToyForward(m, x, h, y);
        y[f.label] -= 1.0;  // d(cross-entropy)/d(logits)
        for (std::size_t k = 0; k < out_dim; ++k) g_b2[k] += y[k];
        AddOuter(y, h, 1.0, &g_w2);
        std::fill(dh.begin(), dh.end(), 0.0);
        AddMatTVec(m.output_weights, y, dh);
        for (std::size_t j = 0; j < hidden; ++j) dh[j] *= 1.0 - h[j] * h[j];
        for (std::size_t j = 0; j < hidden; ++j) g_b1[j] += dh[j];
        AddOuter(dh, x, 1.0, &g_w1);
      }
      const double step = options.learning_rate / static_cast<double>(end - start);
      for (std::size_t k = 0; k < g_w1.size(); ++k)
        m.hidden_weights.values()[k] -= step * g_w1.values()[k];
      for (std::size_t k = 0; k < g_w2.size(); ++k)
        m.output_weights.values()[k] -= step * g_w2.values()[k];
      for (std::size_t j = 0; j < hidden; ++j) m.hidden_bias[j] -= step * g_b1[j];
      for (std::size_t k = 0; k < out_dim; ++k) m.output_bias[k] -= step * g_b2[k];
    }
  }
  if (!m.hidden_weights.AllFinite() || !m.output_weights.AllFinite())
    Fail(ErrorKind::kNumeric, "toy AM training diverged");

  std::size_t correct = 0;
  for (const auto &f : frames) {
    ToyForward(m, feats[f.utt].frames.row(f.t), h, y);
    correct += Argmax(y) == f.label;
  }
  return {std::move(m), static_cast<double>(correct) / static_cast<double>(frames.size())};
}

PosteriorSequence ApplyToyAm(const ToyAcousticModel &model, const FeatureSequence &features) {
  if (features.frames.cols() != model.feature_dim())
    Fail(ErrorKind::kDimensionMismatch,
         "dimension mismatch: model " + model.lang_id + " expects " +
             std::to_string(model.feature_dim()) + " features, " + features.utt_id +
             " has " + std::to_string(features.frames.cols()));
  PosteriorSequence out{model.lang_id, features.utt_id,
                        Matrix(features.frames.rows(), model.output_dim())};
  std::vector<double> h(model.hidden_bias.size());
  for (std::size_t t = 0; t < features.frames.rows(); ++t)
    ToyForward(model, features.frames.row(t), h, out.frames.row(t));
  return out;
}

double FrameAccuracy(const ToyAcousticModel &model, const CorpusManifest &manifest) {
  std::size_t correct = 0, total = 0;
  for (const auto &r : manifest.records) {
    auto post = ApplyToyAm(model, ReadFeatures(r.feature_file));
    if (r.frame_labels.size() != post.num_frames())
      Fail(ErrorKind::kFrameMismatch, "frame labels do not match features for " + r.utt_id);
    for (std::size_t t = 0; t < post.num_frames(); ++t)
      correct += Argmax(post.frames.row(t)) == static_cast<std::size_t>(r.frame_labels[t]);
    total += post.num_frames();
  }
  if (total == 0) Fail(ErrorKind::kInvalidArgument, "empty manifest");
  return static_cast<double>(correct) / static_cast<double>(total);
}

double CrossFrameAccuracy(const ToyAcousticModel &model, const SynthLanguageSpec &model_spec,
                          const CorpusManifest &foreign) {
  std::size_t correct = 0, total = 0;
  for (const auto &r : foreign.records) {
    auto post = ApplyToyAm(model, ReadFeatures(r.feature_file));
    if (r.phones.size() != post.num_frames())
      Fail(ErrorKind::kFrameMismatch, "record " + r.utt_id + " lacks latent phones");
    for (std::size_t t = 0; t < post.num_frames(); ++t) {
      const int p = r.phones[t];
      if (p >= model_spec.num_latent_phones) continue;
      const auto expected =
          static_cast<std::size_t>(model_spec.phone_to_token[static_cast<std::size_t>(p)]);
      correct += Argmax(post.frames.row(t)) == expected;
      ++total;
    }
  }
  if (total == 0) Fail(ErrorKind::kInvalidArgument, "no comparable frames");
  return static_cast<double>(correct) / static_cast<double>(total);
}

std::vector<fs::path> EmitPosteriors(const ToyAcousticModel &model,
                                     const CorpusManifest &manifest, const fs::path &out_dir,
                                     std::size_t jobs) {
  std::vector<fs::path> paths(manifest.size());
  ParallelFor(manifest.size(), jobs, [&](std::size_t i) {
    const auto &r = manifest.records[i];
    auto post = ApplyToyAm(model, ReadFeatures(r.feature_file));
    post.utt_id = r.utt_id;
    paths[i] = PosteriorPath(out_dir, r.utt_id);
    WritePosteriors(post, paths[i]);
  });
  return paths;
}

std::string SerializeToyAm(const ToyAcousticModel &model) {
  ordered_json j;
  j["lang_id"] = model.lang_id;
  j["hidden_weights"] = MatrixToJson(model.hidden_weights);
  j["hidden_bias"] = model.hidden_bias;
  j["output_weights"] = MatrixToJson(model.output_weights);
  j["output_bias"] = model.output_bias;
  return j.dump() + "\n";
}

ToyAcousticModel ParseToyAm(std::string_view text) {
  ToyAcousticModel m;
  try {
    auto j = json::parse(text);
    m.lang_id = j.at("lang_id").get<std::string>();
    m.hidden_weights = MatrixFromJson(j.at("hidden_weights"));
    m.hidden_bias = j.at("hidden_bias").get<std::vector<double>>();
    m.output_weights = MatrixFromJson(j.at("output_weights"));
    m.output_bias = j.at("output_bias").get<std::vector<double>>();
  } catch (const json::exception &e) {
    Fail(ErrorKind::kParse, std::string("toy AM: ") + e.what());
  }
  if (m.hidden_bias.size() != m.hidden_weights.rows() ||
      m.output_weights.cols() != m.hidden_weights.rows() ||
      m.output_bias.size() != m.output_weights.rows())
    Fail(ErrorKind::kDimensionMismatch, "dimension mismatch: toy AM tensors");
  return m;
}

void SaveToyAm(const ToyAcousticModel &model, const fs::path &path) {
  detail::WriteFileBytes(path, SerializeToyAm(model));
}

ToyAcousticModel LoadToyAm(const fs::path &path) {
  return ParseToyAm(detail::ReadFileBytes(path));
}

// ---------------------------------------------------------------------------

SynthFixtureConfig ParseFixtureConfig(std::string_view json_text) {
  SynthFixtureConfig c;
  try {
    auto j = json::parse(json_text);
    CheckKeys(j, {"feature_dim", "emission_stddev", "min_len", "max_len", "am", "languages"},
              "fixture");
    c.feature_dim = j.value("feature_dim", c.feature_dim);
    c.emission_stddev = j.value("emission_stddev", c.emission_stddev);
    c.min_len = j.value("min_len", c.min_len);
    c.max_len = j.value("max_len", c.max_len);
    if (j.contains("am")) {
      const auto &a = j["am"];
      CheckKeys(a, {"epochs", "learning_rate", "hidden_dim", "batch_frames", "seed"}, "am");
      c.am.epochs = a.value("epochs", c.am.epochs);
      c.am.learning_rate = a.value("learning_rate", c.am.learning_rate);
      c.am.hidden_dim = a.value("hidden_dim", c.am.hidden_dim);
      c.am.batch_frames = a.value("batch_frames", c.am.batch_frames);
      c.am.seed = a.value("seed", c.am.seed);
    }
    for (const auto &l : j.at("languages")) {
      CheckKeys(l, {"lang_id", "tokens", "means_seed", "map_seed", "corpus_seed", "train_utts",
                    "test_utts"},
                "language");
      SynthLanguageConfig lc;
      lc.lang_id = l.at("lang_id").get<std::string>();
      lc.tokens = l.at("tokens").get<std::vector<std::string>>();
      lc.means_seed = l.value("means_seed", lc.means_seed);
      lc.map_seed = l.value("map_seed", lc.map_seed);
      lc.corpus_seed = l.value("corpus_seed", lc.corpus_seed);
      lc.train_utts = l.value("train_utts", lc.train_utts);
      lc.test_utts = l.value("test_utts", lc.test_utts);
      c.languages.push_back(std::move(lc));
    }
  } catch (const json::exception &e) {
    Fail(ErrorKind::kParse, std::string("fixture config: ") + e.what());
  }
  return c;
}

SynthFixtureConfig LoadFixtureConfig(const fs::path &path) {
  return ParseFixtureConfig(detail::ReadFileBytes(path));
}

std::string SerializeFixtureConfig(const SynthFixtureConfig &c) {
  ordered_json j;
  j["feature_dim"] = c.feature_dim;
  j["emission_stddev"] = c.emission_stddev;
  j["min_len"] = c.min_len;
  j["max_len"] = c.max_len;
  j["am"] = {{"epochs", c.am.epochs},
             {"learning_rate", c.am.learning_rate},
             {"hidden_dim", c.am.hidden_dim},
             {"batch_frames", c.am.batch_frames},
             {"seed", c.am.seed}};
  j["languages"] = ordered_json::array();
  for (const auto &l : c.languages) {
    ordered_json lj;
    lj["lang_id"] = l.lang_id;
    lj["tokens"] = l.tokens;
    lj["means_seed"] = l.means_seed;
    lj["map_seed"] = l.map_seed;
    lj["corpus_seed"] = l.corpus_seed;
    lj["train_utts"] = l.train_utts;
    lj["test_utts"] = l.test_utts;
    j["languages"].push_back(lj);
  }
  return j.dump(2) + "\n";
}

SynthFixtureConfig DemoFixtureConfig() {
  SynthFixtureConfig c;
  c.am.seed = 17;
  c.languages = {
      {"tgt", {"<blk>", "a", "b", "d", "e", "i", "k", "o", "u", "_"}, 1, 11, 101, 200, 50},
      {"rel", {"<blk>", "a", "e", "g", "i", "m", "o", "u", "y", "_"}, 1, 12, 102, 200, 50},
      {"unr", {"<blk>", "ka", "ki", "la", "ma", "na", "pa", "ra", "sa", "ta", "wa", "_"},
       3, 13, 103, 200, 50},
  };
  return c;
}

std::vector<SynthLanguageSpec> BuildLanguageSpecs(const SynthFixtureConfig &config) {
  if (config.languages.empty())
    Fail(ErrorKind::kInvalidArgument, "fixture needs at least one language");
  if (config.feature_dim < 1) Fail(ErrorKind::kInvalidArgument, "feature_dim must be >= 1");
  if (config.min_len < 1 || config.min_len > config.max_len)
    Fail(ErrorKind::kInvalidArgument, "need 1 <= min_len <= max_len");
  if (config.am.hidden_dim < 1 || config.am.batch_frames < 1 ||
      !(config.am.learning_rate >= 0.0))
    Fail(ErrorKind::kInvalidArgument, "invalid toy AM options");
  std::set<std::string> ids;
  std::vector<SynthLanguageSpec> specs;
  for (const auto &l : config.languages) {
    if (!ids.insert(l.lang_id).second)
      Fail(ErrorKind::kInvalidArgument, "duplicate language " + l.lang_id);
    if (l.lang_id.empty() || l.lang_id.find('/') != std::string::npos)
      Fail(ErrorKind::kInvalidArgument, "invalid lang_id '" + l.lang_id + "'");
    if (l.train_utts < 1)
      Fail(ErrorKind::kInvalidArgument, l.lang_id + ": train_utts must be >= 1");
    SynthLanguageSpec s;
    s.lang_id = l.lang_id;
    s.inventory = TokenInventory(l.lang_id, l.tokens, 0);
    s.num_latent_phones = static_cast<int>(s.inventory.size());
    s.phone_to_token = DrawPhoneToToken(s.inventory, l.map_seed);
    s.emission_means = DrawEmissionMeans(s.num_latent_phones, config.feature_dim, l.means_seed);
    s.emission_stddev = config.emission_stddev;
    s.seed = l.corpus_seed;
    ValidateSpec(s);
    specs.push_back(std::move(s));
  }
  // Languages sharing means_seed must agree on phone count to share acoustics.
  for (std::size_t a = 0; a < config.languages.size(); ++a)
    for (std::size_t b = a + 1; b < config.languages.size(); ++b)
      if (config.languages[a].means_seed == config.languages[b].means_seed &&
          specs[a].num_latent_phones != specs[b].num_latent_phones)
        Fail(ErrorKind::kInvalidArgument, "related languages " + specs[a].lang_id + " and " +
                                              specs[b].lang_id + " differ in phone count");
  return specs;
}

FixtureSummary BuildFixture(const SynthFixtureConfig &config, const fs::path &root,
                            std::size_t jobs) {
  const auto specs = BuildLanguageSpecs(config);
  const FixtureLayout layout{root};
  const std::vector<std::string> splits{"train", "test"};

  std::map<LangId, std::map<std::string, CorpusManifest>> corpora;
  std::map<LangId, ToyAcousticModel> models;
  FixtureSummary summary;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto &spec = specs[i];
    const auto &lc = config.languages[i];
    SaveInventory(spec.inventory, layout.Inventory(spec.lang_id));
    for (const auto &split : splits) {
      CorpusOptions opt;
      opt.num_utts = split == "train" ? lc.train_utts : lc.test_utts;
      opt.min_len = config.min_len;
      opt.max_len = config.max_len;
      opt.split = split;
      opt.jobs = jobs;
      corpora[spec.lang_id][split] =
          GenerateCorpus(spec, opt, layout.Manifest(spec.lang_id, split).parent_path());
    }
    ToyAmOptions am = config.am;
    am.seed = detail::MixSeed(config.am.seed, detail::HashString(spec.lang_id));
    auto trained = TrainToyAm(corpora[spec.lang_id]["train"], spec.inventory, am);
    SaveToyAm(trained.model, layout.AcousticModel(spec.lang_id));
    summary.train_accuracy[spec.lang_id] = trained.train_frame_accuracy;
    const auto &test = corpora[spec.lang_id]["test"];
    summary.test_accuracy[spec.lang_id] =
        test.empty() ? trained.train_frame_accuracy : FrameAccuracy(trained.model, test);
    models.emplace(spec.lang_id, std::move(trained.model));
  }
  for (const auto &spec : specs) {
    for (const auto &audio : specs) {
      for (const auto &split : splits)
        EmitPosteriors(models.at(spec.lang_id), corpora[audio.lang_id][split],
                       layout.Posteriors(audio.lang_id, split, spec.lang_id), jobs);
      const auto &test = corpora[audio.lang_id]["test"];
      if (!test.empty())
        summary.cross_accuracy[spec.lang_id][audio.lang_id] =
            CrossFrameAccuracy(models.at(spec.lang_id), spec, test);
    }
  }
  ordered_json sj;
  sj["train_accuracy"] = summary.train_accuracy;
  sj["test_accuracy"] = summary.test_accuracy;
  sj["cross_accuracy"] = summary.cross_accuracy;
  detail::WriteFileBytes(root / "fixture_summary.json", sj.dump(2) + "\n");
  detail::WriteFileBytes(root / "fixture.json", SerializeFixtureConfig(config));
  return summary;
}

}  // namespace xling
