// SPDX-License-Identifier: Apache-2.0
#include <algorithm>

#include "doctest.h"
#include "test_support.h"
#include "xling/mesd_model.h"
#include "xling/numerics.h"

using namespace xling;
using xling::testing::KindOf;
using xling::testing::TempDir;

namespace {

// Mean frame KL recomputed from Forward alone.
double ForwardLoss(const MesdModel &m, const LangId &lang, const PosteriorSequence &in,
                   const PosteriorSequence &target) {
  const auto out = Forward(m, lang, in).posteriors;
  double sum = 0.0;
  for (std::size_t t = 0; t < target.num_frames(); ++t)
    sum += KlDivergenceFrame(target.frames.row(t), out.frames.row(t));
  return sum / static_cast<double>(target.num_frames());
}

// Largest relative error between Backward and central differences over
// every scalar parameter. Entries whose magnitudes are both below `floor`
// are compared on an absolute scale instead.
double WorstGradientError(std::uint64_t seed, const LangId &lang, double h = 1e-5,
                          double floor = 1e-6) {
  const auto inv = testing::SmallInventory("tgt", 5);
  MesdModel model = InitModel(inv, {{"a", 5}, {"b", 6}}, 4, seed);
  std::mt19937_64 rng(seed * 7919 + 1);
  // Scale weights up so tanh units leave their linear region.
  for (auto &t : ParameterTensors(model))
    for (double &v : t.values) v *= 2.0;
  const auto input = testing::RandomPosteriors(rng, lang, "u", 4, lang == "a" ? 5 : 6);
  const auto target = testing::RandomPosteriors(rng, "tgt", "u", 4, 5);

  const auto analytic = Backward(model, lang, input, target);
  CHECK(analytic.loss == doctest::Approx(ForwardLoss(model, lang, input, target)).epsilon(1e-12));
  auto params = ParameterTensors(model);
  const auto grads = ParameterTensors(analytic.gradients);
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (std::size_t k = 0; k < params[i].values.size(); ++k) {
      double &p = params[i].values[k];
      const double saved = p;
      p = saved + h;
      const double up = ForwardLoss(model, lang, input, target);
      p = saved - h;
      const double down = ForwardLoss(model, lang, input, target);
      p = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = grads[i].values[k];
      const double scale = std::max({std::abs(a), std::abs(numeric), floor});
      worst = std::max(worst, std::abs(a - numeric) / scale);
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("analytic gradients match central differences") {
  for (std::uint64_t seed : {1u, 2u, 3u})
    for (const LangId lang : {"a", "b"}) {
      CAPTURE(seed);
      CAPTURE(lang);
      CHECK(WorstGradientError(seed, lang) < 1e-4);
    }
}

TEST_CASE("initialization") {
  const auto inv = testing::SmallInventory("tgt", 100);
  std::map<LangId, std::size_t> dims{{"x", 100}, {"y", 100}, {"z", 100}};
  const auto m = InitModel(inv, dims, 64, 1);
  CHECK(m.encoders.size() == 3);
  CHECK(m.decoder.input_dim == 128);
  CHECK(m.target_dim() == 100);
  CHECK(InitModel(inv, dims, 64, 1) == m);
  CHECK_FALSE(InitModel(inv, dims, 64, 2) == m);
  CHECK(KindOf([&] { InitModel(inv, dims, 0, 1); }) == ErrorKind::kInvalidArgument);
  const double bound = 1.0 / std::sqrt(100.0);
  for (double v : m.encoders.at("x").forward.input_weights.values()) CHECK(std::abs(v) <= bound);
  for (double v : m.projection_bias) CHECK(v == 0.0);
}

TEST_CASE("parameter counts") {
  const auto inv5 = testing::SmallInventory("tgt", 5);
  CHECK(CountParams(InitModel(inv5, {{"a", 5}}, 4, 0)) == 229);
  // A second identical encoder adds 2(h*d + h*h + h).
  CHECK(CountParams(InitModel(inv5, {{"a", 5}, {"b", 5}}, 4, 0)) == 229 + 2 * (20 + 16 + 4));

  // Scalars actually stored, enumerated independently of CountParams.
  const auto m = InitModel(inv5, {{"a", 5}, {"b", 6}}, 3, 0);
  std::size_t stored = 0;
  for (const auto &t : ParameterTensors(m)) stored += t.values.size();
  CHECK(CountParams(m) == stored);

  // Three encoders of width 100 with a 100-token target: 12h^2 + 808h + 100.
  const auto inv100 = testing::SmallInventory("tgt", 100);
  std::map<LangId, std::size_t> dims{{"x", 100}, {"y", 100}, {"z", 100}};
  for (std::size_t h : {1u, 7u, 32u})
    CHECK(CountParams(InitModel(inv100, dims, h, 0)) == 12 * h * h + 808 * h + 100);
  const std::size_t h432 = 12 * 432 * 432 + 808 * 432 + 100;
  CHECK(h432 == 2588644);
  CHECK(std::abs(static_cast<double>(h432) - 2.59e6) < 0.01 * 2.59e6);
  // 431 and 433 bracket the target less closely.
  auto gap = [](std::size_t h) {
    return std::abs(static_cast<double>(12 * h * h + 808 * h + 100) - 2.59e6);
  };
  CHECK(gap(432) < gap(431));
  CHECK(gap(432) < gap(433));
}

TEST_CASE("forward is frame-synchronous and stochastic") {
  const auto inv = testing::SmallInventory("tgt", 5);
  const auto m = InitModel(inv, {{"a", 5}, {"b", 6}}, 4, 8);
  std::mt19937_64 rng(2);
  const auto in = testing::RandomPosteriors(rng, "a", "u", 5, 5);
  const auto out = Forward(m, "a", in);
  CHECK(out.posteriors.num_frames() == 5);
  CHECK(out.posteriors.dim() == 5);
  CHECK(out.posteriors.lang_id == "tgt");
  CHECK(out.source_lang_id == "a");
  CHECK(out.model_checksum == ModelChecksum(m));
  for (std::size_t t = 0; t < 5; ++t) {
    double sum = 0.0;
    for (double v : out.posteriors.frames.row(t)) sum += v;
    CHECK(std::abs(sum - 1.0) < 1e-6);
  }
  CHECK(KindOf([&] { Forward(m, "zz", in); }) == ErrorKind::kUnknownLanguage);
  CHECK(KindOf([&] { Forward(m, "b", in); }) == ErrorKind::kDimensionMismatch);
}

TEST_CASE("utterances are mapped independently") {
  const auto inv = testing::SmallInventory("tgt", 5);
  const auto m = InitModel(inv, {{"a", 5}}, 4, 8);
  std::mt19937_64 rng(4);
  std::vector<PosteriorSequence> batch;
  for (int i = 0; i < 4; ++i)
    batch.push_back(testing::RandomPosteriors(rng, "a", "u" + std::to_string(i), 3 + i, 5));
  std::vector<Matrix> first;
  for (const auto &s : batch) first.push_back(Forward(m, "a", s).posteriors.frames);
  std::reverse(batch.begin(), batch.end());
  for (std::size_t i = 0; i < batch.size(); ++i)
    CHECK(Forward(m, "a", batch[i]).posteriors.frames == first[first.size() - 1 - i]);
}

TEST_CASE("backward edge cases") {
  const auto inv = testing::SmallInventory("tgt", 5);
  const auto m = InitModel(inv, {{"a", 5}, {"b", 6}}, 4, 8);
  std::mt19937_64 rng(5);
  const auto in = testing::RandomPosteriors(rng, "a", "u", 4, 5);

  SUBCASE("target equal to the output is a minimum") {
    const auto target = Forward(m, "a", in).posteriors;
    const auto r = Backward(m, "a", in, target);
    CHECK(std::abs(r.loss) < 1e-12);
    for (double g : r.gradients.projection_bias) CHECK(std::abs(g) < 1e-12);
  }
  SUBCASE("unused encoder receives exactly zero gradient") {
    const auto target = testing::RandomPosteriors(rng, "tgt", "u", 4, 5);
    const auto r = Backward(m, "a", in, target);
    const auto &b = r.gradients.encoders.at("b");
    for (const auto *dir : {&b.forward, &b.backward}) {
      for (double g : dir->input_weights.values()) CHECK(g == 0.0);
      for (double g : dir->recurrent_weights.values()) CHECK(g == 0.0);
      for (double g : dir->bias) CHECK(g == 0.0);
    }
  }
  SUBCASE("frame count mismatch") {
    const auto target = testing::RandomPosteriors(rng, "tgt", "u", 3, 5);
    CHECK(KindOf([&] { Backward(m, "a", in, target); }) == ErrorKind::kFrameMismatch);
  }
}

TEST_CASE("checkpoints") {
  TempDir dir("ckpt");
  const auto inv = testing::SmallInventory("tgt", 5);
  const auto m = InitModel(inv, {{"a", 5}, {"b", 6}}, 4, 8);
  SaveCheckpoint(m, dir / "m.xlck");
  const auto back = LoadCheckpoint(dir / "m.xlck");
  CHECK(back == m);
  CHECK(EncodeCheckpoint(back) == EncodeCheckpoint(m));
  std::mt19937_64 rng(6);
  const auto in = testing::RandomPosteriors(rng, "b", "u", 6, 6);
  CHECK(Forward(back, "b", in).posteriors.frames == Forward(m, "b", in).posteriors.frames);

  const std::string bytes = EncodeCheckpoint(m);
  SUBCASE("truncation at every prefix length is a typed error") {
    for (std::size_t n = 0; n < bytes.size(); n += 1 + n / 16)
      CHECK(KindOf([&] { DecodeCheckpoint(std::string_view(bytes).substr(0, n)); }) != ErrorKind::kIo);
  }
  SUBCASE("flipped byte is caught by the checksum") {
    std::string bad = bytes;
    bad[bad.size() / 2] ^= 0x10;
    CHECK(KindOf([&] { DecodeCheckpoint(bad); }) == ErrorKind::kCorruptCheckpoint);
  }
  SUBCASE("wrong magic") {
    std::string bad = bytes;
    bad[0] = 'Z';
    CHECK(KindOf([&] { DecodeCheckpoint(bad); }) == ErrorKind::kBadMagic);
  }
  SUBCASE("mismatched inventory") {
    CHECK(KindOf([&] { LoadCheckpoint(dir / "m.xlck", testing::SmallInventory("tgt", 6)); }) ==
          ErrorKind::kDimensionMismatch);
    CHECK(KindOf([&] { LoadCheckpoint(dir / "m.xlck", testing::SmallInventory("oth", 5)); }) !=
          ErrorKind::kIo);
  }
  SUBCASE("missing file") {
    CHECK(KindOf([&] { LoadCheckpoint(dir / "none.xlck"); }) == ErrorKind::kMissingFile);
  }
}

TEST_CASE("single-source input to a multi-encoder model") {
  const auto inv = testing::SmallInventory("tgt", 5);
  const auto m = InitModel(inv, {{"a", 5}, {"b", 6}, {"c", 7}}, 4, 8);
  std::mt19937_64 rng(9);
  const auto out = Forward(m, "c", testing::RandomPosteriors(rng, "c", "u", 8, 7));
  CHECK(out.posteriors.frames.AllFinite());
  CHECK(out.posteriors.num_frames() == 8);
}
