// SPDX-License-Identifier: Apache-2.0
#include "xling/mesd_model.h"

#include <cmath>
#include <random>

#include "byte_io.h"
#include "xling/error.h"
#include "xling/numerics.h"

namespace fs = std::filesystem;

namespace xling {
namespace {

constexpr std::string_view kCheckpointMagic = "XLCK";

RnnDirectionParams MakeDirection(std::size_t input, std::size_t hidden) {
  return {Matrix(hidden, input), Matrix(hidden, hidden), std::vector<double>(hidden, 0.0)};
}

BiRnnLayerParams MakeLayer(std::size_t input, std::size_t hidden) {
  return {input, hidden, MakeDirection(input, hidden), MakeDirection(input, hidden)};
}

MesdModel MakeShape(const LangId &target, std::size_t target_dim,
                    const std::map<LangId, std::size_t> &source_dims, std::size_t hidden) {
  MesdModel m;
  m.target_lang_id = target;
  m.hidden_dim = hidden;
  for (const auto &[lang, dim] : source_dims) m.encoders.emplace(lang, MakeLayer(dim, hidden));
  m.decoder = MakeLayer(2 * hidden, hidden);
  m.projection = Matrix(target_dim, 2 * hidden);
  m.projection_bias.assign(target_dim, 0.0);
  return m;
}

template <typename Tensor, typename Layer>
void AppendLayer(std::vector<Tensor> &out, const std::string &prefix, Layer &layer) {
  out.push_back({prefix + ".fwd.W", layer.forward.input_weights.values()});
  out.push_back({prefix + ".fwd.U", layer.forward.recurrent_weights.values()});
  out.push_back({prefix + ".fwd.b", layer.forward.bias});
  out.push_back({prefix + ".bwd.W", layer.backward.input_weights.values()});
  out.push_back({prefix + ".bwd.U", layer.backward.recurrent_weights.values()});
  out.push_back({prefix + ".bwd.b", layer.backward.bias});
}

template <typename Tensor, typename Model>
std::vector<Tensor> Tensors(Model &model) {
  std::vector<Tensor> out;
  for (auto &[lang, enc] : model.encoders) AppendLayer(out, "encoder[" + lang + "]", enc);
  AppendLayer(out, "decoder", model.decoder);
  out.push_back({"projection.W", model.projection.values()});
  out.push_back({"projection.b", model.projection_bias});
  return out;
}

// One direction of a tanh RNN over the rows of `x`. Returns T x hidden states.
Matrix RunDirection(const RnnDirectionParams &p, const Matrix &x, bool reverse) {
  const std::size_t T = x.rows();
  const std::size_t H = p.bias.size();
  Matrix h(T, H);
  for (std::size_t step = 0; step < T; ++step) {
    const std::size_t t = reverse ? T - 1 - step : step;
    auto out = h.row(t);
    std::copy(p.bias.begin(), p.bias.end(), out.begin());
    AddMatVec(p.input_weights, x.row(t), out);
    if (step > 0) AddMatVec(p.recurrent_weights, h.row(reverse ? t + 1 : t - 1), out);
    for (double &v : out) v = std::tanh(v);
  }
  return h;
}

// BPTT for one direction. `dh` is dLoss/dh (T x hidden) from above; adds
// parameter gradients into *g and input gradients into *dx.
void BackpropDirection(const RnnDirectionParams &p, const Matrix &x, const Matrix &h,
                       const Matrix &dh, bool reverse, RnnDirectionParams *g, Matrix *dx) {
  const std::size_t T = x.rows();
  const std::size_t H = p.bias.size();
  std::vector<double> carry(H, 0.0), da(H);
  for (std::size_t step = T; step-- > 0;) {
    const std::size_t t = reverse ? T - 1 - step : step;
    auto ht = h.row(t);
    auto dht = dh.row(t);
    for (std::size_t j = 0; j < H; ++j) da[j] = (dht[j] + carry[j]) * (1.0 - ht[j] * ht[j]);
    for (std::size_t j = 0; j < H; ++j) g->bias[j] += da[j];
    AddOuter(da, x.row(t), 1.0, &g->input_weights);
    if (dx != nullptr) AddMatTVec(p.input_weights, da, dx->row(t));
    std::fill(carry.begin(), carry.end(), 0.0);
    if (step > 0) {
      AddOuter(da, h.row(reverse ? t + 1 : t - 1), 1.0, &g->recurrent_weights);
      AddMatTVec(p.recurrent_weights, da, carry);
    }
  }
}

struct LayerCache {
  Matrix fwd, bwd;
};

Matrix Concat(const Matrix &a, const Matrix &b) {
  Matrix out(a.rows(), a.cols() + b.cols());
  for (std::size_t t = 0; t < a.rows(); ++t) {
    auto row = out.row(t);
    std::copy(a.row(t).begin(), a.row(t).end(), row.begin());
    std::copy(b.row(t).begin(), b.row(t).end(), row.begin() + static_cast<std::ptrdiff_t>(a.cols()));
  }
  return out;
}

LayerCache RunLayer(const BiRnnLayerParams &p, const Matrix &x) {
  return {RunDirection(p.forward, x, false), RunDirection(p.backward, x, true)};
}

// Splits dOut (T x 2H) between the two directions and backprops both.
void BackpropLayer(const BiRnnLayerParams &p, const Matrix &x, const LayerCache &cache,
                   const Matrix &dout, BiRnnLayerParams *g, Matrix *dx) {
  const std::size_t T = x.rows();
  const std::size_t H = p.hidden_dim;
  Matrix dfwd(T, H), dbwd(T, H);
  for (std::size_t t = 0; t < T; ++t) {
    auto row = dout.row(t);
    std::copy(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(H), dfwd.row(t).begin());
    std::copy(row.begin() + static_cast<std::ptrdiff_t>(H), row.end(), dbwd.row(t).begin());
  }
  BackpropDirection(p.forward, x, cache.fwd, dfwd, false, &g->forward, dx);
  BackpropDirection(p.backward, x, cache.bwd, dbwd, true, &g->backward, dx);
}

struct ForwardPass {
  LayerCache encoder, decoder;
  Matrix encoded;  // T x 2H
  Matrix decoded;  // T x 2H
  Matrix output;   // T x d_A posteriors
};

const BiRnnLayerParams &EncoderFor(const MesdModel &model, const LangId &lang) {
  auto it = model.encoders.find(lang);
  if (it == model.encoders.end())
    Fail(ErrorKind::kUnknownLanguage, "no encoder for language " + lang);
  return it->second;
}

ForwardPass RunForward(const MesdModel &model, const BiRnnLayerParams &encoder,
                       const PosteriorSequence &input) {
  if (input.dim() != encoder.input_dim)
    Fail(ErrorKind::kDimensionMismatch,
         "dimension mismatch: encoder expects " + std::to_string(encoder.input_dim) +
             " columns, " + input.utt_id + " has " + std::to_string(input.dim()));
  if (input.num_frames() < 1)
    Fail(ErrorKind::kInvalidArgument, "empty input sequence " + input.utt_id);
  ForwardPass f;
  f.encoder = RunLayer(encoder, input.frames);
  f.encoded = Concat(f.encoder.fwd, f.encoder.bwd);
  f.decoder = RunLayer(model.decoder, f.encoded);
  f.decoded = Concat(f.decoder.fwd, f.decoder.bwd);
  f.output = Matrix(input.num_frames(), model.target_dim());
  for (std::size_t t = 0; t < input.num_frames(); ++t) {
    auto out = f.output.row(t);
    std::copy(model.projection_bias.begin(), model.projection_bias.end(), out.begin());
    AddMatVec(model.projection, f.decoded.row(t), out);
    SoftmaxInPlace(out);
  }
  return f;
}

void WriteLayerHeader(detail::ByteWriter &w, const MesdModel &m) {
  w.Bytes(kCheckpointMagic);
  w.U16(kCheckpointVersion);
  w.Str16(m.target_lang_id);
  w.U32(static_cast<std::uint32_t>(m.hidden_dim));
  w.U32(static_cast<std::uint32_t>(m.target_dim()));
  w.U32(static_cast<std::uint32_t>(m.encoders.size()));
  for (const auto &[lang, enc] : m.encoders) {
    w.Str16(lang);
    w.U32(static_cast<std::uint32_t>(enc.input_dim));
  }
}

std::string EncodeBody(const MesdModel &model) {
  detail::ByteWriter w;
  WriteLayerHeader(w, model);
  for (const auto &t : ParameterTensors(model))
    for (double v : t.values) w.F64(v);
  return w.buffer();
}

}  // namespace

std::vector<NamedTensor> ParameterTensors(MesdModel &model) {
  return Tensors<NamedTensor>(model);
}

std::vector<ConstNamedTensor> ParameterTensors(const MesdModel &model) {
  return Tensors<ConstNamedTensor>(model);
}

MesdModel ZerosLike(const MesdModel &model) {
  std::map<LangId, std::size_t> dims;
  for (const auto &[lang, enc] : model.encoders) dims[lang] = enc.input_dim;
  return MakeShape(model.target_lang_id, model.target_dim(), dims, model.hidden_dim);
}

MesdModel InitModel(const TokenInventory &target_inventory,
                    const std::map<LangId, std::size_t> &source_dims, std::size_t hidden_dim,
                    std::uint64_t seed) {
  if (hidden_dim < 1) Fail(ErrorKind::kInvalidArgument, "hidden_dim must be >= 1");
  if (source_dims.empty()) Fail(ErrorKind::kInvalidArgument, "need at least one source language");
  for (const auto &[lang, dim] : source_dims)
    if (dim < 1) Fail(ErrorKind::kInvalidArgument, "source " + lang + " has zero width");
  MesdModel m = MakeShape(target_inventory.lang_id(), target_inventory.size(), source_dims,
                          hidden_dim);
  std::mt19937_64 rng(seed);
  auto fill = [&](Matrix &w) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(w.cols()));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double &v : w.values()) v = dist(rng);
  };
  auto fill_layer = [&](BiRnnLayerParams &l) {
    fill(l.forward.input_weights);
    fill(l.forward.recurrent_weights);
    fill(l.backward.input_weights);
    fill(l.backward.recurrent_weights);
  };
  for (auto &[lang, enc] : m.encoders) fill_layer(enc);
  fill_layer(m.decoder);
  fill(m.projection);
  return m;
}

std::size_t CountParams(const MesdModel &model) {
  std::size_t n = 0;
  for (const auto &t : ParameterTensors(model)) n += t.values.size();
  return n;
}

MappedPosteriors Forward(const MesdModel &model, const LangId &source_lang,
                         const PosteriorSequence &input) {
  auto f = RunForward(model, EncoderFor(model, source_lang), input);
  return {PosteriorSequence{model.target_lang_id, input.utt_id, std::move(f.output)},
          source_lang, ModelChecksum(model)};
}

double AccumulateGradients(const MesdModel &model, const LangId &source_lang,
                           const PosteriorSequence &input, const PosteriorSequence &target,
                           double scale, MesdModel *gradients) {
  const auto &encoder = EncoderFor(model, source_lang);
  if (target.dim() != model.target_dim())
    Fail(ErrorKind::kDimensionMismatch,
         "dimension mismatch: target has " + std::to_string(target.dim()) +
             " columns, model outputs " + std::to_string(model.target_dim()));
  if (target.num_frames() != input.num_frames())
    Fail(ErrorKind::kFrameMismatch, "frame count mismatch for " + input.utt_id + ": " +
                                        std::to_string(input.num_frames()) + " vs " +
                                        std::to_string(target.num_frames()));
  const auto f = RunForward(model, encoder, input);
  const std::size_t T = input.num_frames();
  const std::size_t D = model.target_dim();

  double total = 0.0;
  Matrix dlogits(T, D);
  for (std::size_t t = 0; t < T; ++t) {
    auto p = target.frames.row(t);
    auto y = f.output.row(t);
    total += KlDivergenceFrame(p, y);
    // g_k = dKL/dy_k for the clamped log; the softmax Jacobian maps it to
    // dlogit_j = y_j * (g_j - sum_k y_k g_k).
    double yg = 0.0;
    auto dl = dlogits.row(t);
    for (std::size_t k = 0; k < D; ++k) {
      dl[k] = (p[k] > 0.0 && y[k] > kLogFloor) ? -p[k] / y[k] : 0.0;
      yg += y[k] * dl[k];
    }
    for (std::size_t k = 0; k < D; ++k) dl[k] = scale * y[k] * (dl[k] - yg);
  }

  Matrix ddecoded(T, 2 * model.hidden_dim);
  for (std::size_t t = 0; t < T; ++t) {
    auto dl = dlogits.row(t);
    for (std::size_t k = 0; k < D; ++k) gradients->projection_bias[k] += dl[k];
    AddOuter(dl, f.decoded.row(t), 1.0, &gradients->projection);
    AddMatTVec(model.projection, dl, ddecoded.row(t));
  }
  Matrix dencoded(T, 2 * model.hidden_dim);
  BackpropLayer(model.decoder, f.encoded, f.decoder, ddecoded, &gradients->decoder, &dencoded);
  BackpropLayer(encoder, input.frames, f.encoder, dencoded,
                &gradients->encoders.at(source_lang), nullptr);
  return total;
}

LossAndGradients Backward(const MesdModel &model, const LangId &source_lang,
                          const PosteriorSequence &input, const PosteriorSequence &target) {
  LossAndGradients out{0.0, ZerosLike(model)};
  const double frames = static_cast<double>(input.num_frames());
  const double sum = AccumulateGradients(model, source_lang, input, target,
                                         frames > 0 ? 1.0 / frames : 0.0, &out.gradients);
  out.loss = sum / frames;
  return out;
}

std::uint32_t ModelChecksum(const MesdModel &model) { return detail::Crc32(EncodeBody(model)); }

std::string EncodeCheckpoint(const MesdModel &model) {
  std::string body = EncodeBody(model);
  detail::ByteWriter w;
  w.Bytes(body);
  w.U32(detail::Crc32(body));
  return w.buffer();
}

MesdModel DecodeCheckpoint(std::string_view bytes) {
  detail::ByteReader r(bytes);
  if (bytes.size() < kCheckpointMagic.size() || r.Bytes(kCheckpointMagic.size()) != kCheckpointMagic)
    Fail(ErrorKind::kBadMagic, "magic mismatch: not a checkpoint");
  if (r.U16() != kCheckpointVersion)
    Fail(ErrorKind::kCorruptCheckpoint, "corrupt checkpoint: unsupported version");
  const LangId target = r.Str16();
  const std::size_t hidden = r.U32();
  const std::size_t target_dim = r.U32();
  const std::size_t count = r.U32();
  // Encoder entries are at least 6 bytes each.
  if (count > r.remaining() / 6) Fail(ErrorKind::kTruncated, "truncated");
  std::map<LangId, std::size_t> dims;
  std::vector<LangId> order;
  for (std::size_t i = 0; i < count; ++i) {
    LangId lang = r.Str16();
    const std::size_t dim = r.U32();
    order.push_back(lang);
    if (!dims.emplace(lang, dim).second)
      Fail(ErrorKind::kCorruptCheckpoint, "corrupt checkpoint: duplicate encoder " + lang);
  }
  if (!std::is_sorted(order.begin(), order.end()))
    Fail(ErrorKind::kCorruptCheckpoint, "corrupt checkpoint: encoder table out of order");
  if (hidden < 1 || target_dim < 2 || dims.empty())
    Fail(ErrorKind::kCorruptCheckpoint, "corrupt checkpoint: invalid shape");

  // Bound the allocation by what the file can hold before building shapes.
  std::size_t expected = 2 * (2 * hidden * hidden + hidden * hidden + hidden) +
                         target_dim * 2 * hidden + target_dim;
  for (const auto &[lang, dim] : dims) expected += 2 * (hidden * dim + hidden * hidden + hidden);
  if (expected > r.remaining() / 8) Fail(ErrorKind::kTruncated, "truncated");

  MesdModel m = MakeShape(target, target_dim, dims, hidden);
  for (auto &t : ParameterTensors(m))
    for (double &v : t.values) v = r.F64();
  const std::size_t body_size = r.position();
  const std::uint32_t stored = r.U32();
  if (r.remaining() != 0)
    Fail(ErrorKind::kCorruptCheckpoint, "corrupt checkpoint: trailing bytes");
  if (stored != detail::Crc32(bytes.substr(0, body_size)))
    Fail(ErrorKind::kCorruptCheckpoint, "corrupt checkpoint: checksum mismatch");
  for (const auto &t : ParameterTensors(m))
    for (double v : t.values)
      if (!std::isfinite(v)) Fail(ErrorKind::kCorruptCheckpoint, "corrupt checkpoint: non-finite");
  return m;
}

void SaveCheckpoint(const MesdModel &model, const fs::path &path) {
  detail::WriteFileBytes(path, EncodeCheckpoint(model));
}

MesdModel LoadCheckpoint(const fs::path &path) {
  return DecodeCheckpoint(detail::ReadFileBytes(path));
}

MesdModel LoadCheckpoint(const fs::path &path, const TokenInventory &inventory) {
  MesdModel m = LoadCheckpoint(path);
  if (m.target_dim() != inventory.size())
    Fail(ErrorKind::kDimensionMismatch,
         "dimension mismatch: checkpoint outputs " + std::to_string(m.target_dim()) +
             " classes, inventory " + inventory.lang_id() + " has " +
             std::to_string(inventory.size()));
  if (m.target_lang_id != inventory.lang_id())
    Fail(ErrorKind::kUnknownLanguage, "checkpoint targets " + m.target_lang_id +
                                          ", inventory is " + inventory.lang_id());
  return m;
}

}  // namespace xling
