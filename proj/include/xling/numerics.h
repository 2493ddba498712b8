// SPDX-License-Identifier: Apache-2.0
/**
 * @file   numerics.h
 * @brief  Probability transforms, KL divergence, edit distance and ranking
 *         helpers shared by the mapping, metric and decoding code.
 *
 * All functions are pure. Argmax and top-n break ties toward the lowest
 * index so that frame-level decisions are deterministic.
 */
#ifndef XLING_NUMERICS_H_
#define XLING_NUMERICS_H_

#include <algorithm>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace xling {

// Lower clamp applied to probabilities before taking logs.
inline constexpr double kLogFloor = 1e-8;

// Numerically stable softmax (max subtraction). Throws "empty logits".
std::vector<double> Softmax(std::span<const double> logits);

// In-place variant used on hot paths; logits.size() must be >= 1.
void SoftmaxInPlace(std::span<double> logits);

// sum_k target_k * (log target_k - log max(mapped_k, kLogFloor)), with the
// 0 * log 0 := 0 convention on the target side.
double KlDivergenceFrame(std::span<const double> target,
                         std::span<const double> mapped);

// Lowest index of the maximum value. row must be non-empty.
std::size_t Argmax(std::span<const double> row);

// Indices of the n largest values, in descending order of value with ties
// toward lower index. Requires 1 <= n <= row.size().
std::vector<std::size_t> TopNIndices(std::span<const double> row,
                                     std::size_t n);

// Unit-cost insert/delete/substitute distance.
template <typename T>
std::size_t Levenshtein(std::span<const T> ref, std::span<const T> hyp) {
  std::vector<std::size_t> prev(hyp.size() + 1), cur(hyp.size() + 1);
  for (std::size_t j = 0; j <= hyp.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= ref.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= hyp.size(); ++j) {
      std::size_t sub = prev[j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      std::size_t del = prev[j] + 1;
      std::size_t ins = cur[j - 1] + 1;
      cur[j] = std::min(sub, std::min(del, ins));
    }
    std::swap(prev, cur);
  }
  return prev[hyp.size()];
}

std::size_t Levenshtein(std::string_view ref, std::string_view hyp);

// CTC-style collapse: merge consecutive repeats, then drop blanks.
std::vector<std::size_t> CollapseRepeatsAndBlanks(
    std::span<const std::size_t> ids, std::size_t blank);

}  // namespace xling

#endif  // XLING_NUMERICS_H_
