// SPDX-License-Identifier: Apache-2.0
/**
 * @file   mesd_model.h
 * @brief  Multi-encoder single-decoder posterior mapping network.
 *
 * One bidirectional tanh RNN encoder per source language reads that
 * language's acoustic-model posteriors. Any encoder's output feeds a shared
 * bidirectional RNN decoder, followed by an affine projection and a softmax
 * over the target inventory. The network is frame-synchronous: T frames in,
 * T target-language posterior rows out.
 *
 * With K encoders of input widths d_k, hidden size h and target width d_A
 * the parameter count is
 *
 *   sum_k 2(h*d_k + h*h + h) + 2(h*2h + h*h + h) + d_A*2h + d_A.
 *
 * For three encoders and d_k = d_A = 100 a hidden size of 432 gives
 * 2,588,644 parameters (about 2.59 million).
 *
 * Checkpoint layout (little-endian):
 *
 *   "XLCK" | u16 version | target lang (u16 len + bytes) | u32 hidden |
 *   u32 d_A | u32 encoder count | per encoder: lang (u16 len + bytes),
 *   u32 input dim | all parameter tensors as f64 in declaration order |
 *   u32 CRC32 of every preceding byte
 */
#ifndef XLING_MESD_MODEL_H_
#define XLING_MESD_MODEL_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "xling/matrix.h"
#include "xling/posterior_io.h"

namespace xling {

inline constexpr std::uint16_t kCheckpointVersion = 1;

struct RnnDirectionParams {
  Matrix input_weights;      // hidden x input
  Matrix recurrent_weights;  // hidden x hidden
  std::vector<double> bias;  // hidden

  friend bool operator==(const RnnDirectionParams &, const RnnDirectionParams &) = default;
};

struct BiRnnLayerParams {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  RnnDirectionParams forward;
  RnnDirectionParams backward;

  std::size_t output_dim() const { return 2 * hidden_dim; }

  friend bool operator==(const BiRnnLayerParams &, const BiRnnLayerParams &) = default;
};

struct MesdModel {
  LangId target_lang_id;
  std::size_t hidden_dim = 0;
  std::map<LangId, BiRnnLayerParams> encoders;  // iteration order = declaration order
  BiRnnLayerParams decoder;
  Matrix projection;                     // d_A x 2*hidden
  std::vector<double> projection_bias;   // d_A

  std::size_t target_dim() const { return projection.rows(); }
  bool HasEncoder(const LangId &lang) const { return encoders.count(lang) != 0; }

  friend bool operator==(const MesdModel &, const MesdModel &) = default;
};

struct NamedTensor {
  std::string name;
  std::span<double> values;
};

struct ConstNamedTensor {
  std::string name;
  std::span<const double> values;
};

// Every trainable tensor in declaration order: encoders (map order), each as
// fwd.{W,U,b} bwd.{W,U,b}; then the decoder likewise; then projection and
// its bias.
std::vector<NamedTensor> ParameterTensors(MesdModel &model);
std::vector<ConstNamedTensor> ParameterTensors(const MesdModel &model);

// Same shapes as `model`, all zeros.
MesdModel ZerosLike(const MesdModel &model);

// Weights uniform in +-1/sqrt(fan_in), biases zero.
MesdModel InitModel(const TokenInventory &target_inventory,
                    const std::map<LangId, std::size_t> &source_dims,
                    std::size_t hidden_dim, std::uint64_t seed);

std::size_t CountParams(const MesdModel &model);

struct MappedPosteriors {
  PosteriorSequence posteriors;  // lang_id = target language
  LangId source_lang_id;
  std::uint32_t model_checksum = 0;
};

// Runs the encoder for `source_lang`, the decoder and the output softmax.
MappedPosteriors Forward(const MesdModel &model, const LangId &source_lang,
                         const PosteriorSequence &input);

struct LossAndGradients {
  double loss = 0.0;
  MesdModel gradients;  // shaped like the model
};

// Mean per-frame KL(target || mapped) over the utterance and its exact
// gradient by backpropagation through time. Encoders other than
// `source_lang` receive zero gradient.
LossAndGradients Backward(const MesdModel &model, const LangId &source_lang,
                          const PosteriorSequence &input,
                          const PosteriorSequence &target);

// Adds scale * d(sum_t KL_t)/d(theta) into *gradients and returns sum_t KL_t.
// Building block for batch losses whose frame normaliser spans utterances.
double AccumulateGradients(const MesdModel &model, const LangId &source_lang,
                           const PosteriorSequence &input,
                           const PosteriorSequence &target, double scale,
                           MesdModel *gradients);

// CRC32 over the serialized parameters.
std::uint32_t ModelChecksum(const MesdModel &model);

std::string EncodeCheckpoint(const MesdModel &model);
MesdModel DecodeCheckpoint(std::string_view bytes);
void SaveCheckpoint(const MesdModel &model, const std::filesystem::path &path);
MesdModel LoadCheckpoint(const std::filesystem::path &path);
// Additionally requires the model to target `inventory` (language and size).
MesdModel LoadCheckpoint(const std::filesystem::path &path,
                         const TokenInventory &inventory);

}  // namespace xling

#endif  // XLING_MESD_MODEL_H_
