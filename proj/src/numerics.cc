// SPDX-License-Identifier: Apache-2.0
#include "xling/numerics.h"

#include <cmath>
#include <numeric>

#include "xling/error.h"

namespace xling {

void SoftmaxInPlace(std::span<double> logits) {
  const double max = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double &v : logits) {
    v = std::exp(v - max);
    sum += v;
  }
  for (double &v : logits) v /= sum;
}

std::vector<double> Softmax(std::span<const double> logits) {
  if (logits.empty()) Fail(ErrorKind::kInvalidArgument, "empty logits");
  std::vector<double> out(logits.begin(), logits.end());
  SoftmaxInPlace(out);
  return out;
}

double KlDivergenceFrame(std::span<const double> target,
                         std::span<const double> mapped) {
  if (target.size() != mapped.size())
    Fail(ErrorKind::kDimensionMismatch, "dimension mismatch");
  double kl = 0.0;
  for (std::size_t k = 0; k < target.size(); ++k) {
    const double p = target[k];
    if (p <= 0.0) continue;
    kl += p * (std::log(std::max(p, kLogFloor)) -
               std::log(std::max(mapped[k], kLogFloor)));
  }
  return kl;
}

std::size_t Argmax(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < row.size(); ++k)
    if (row[k] > row[best]) best = k;
  return best;
}

std::vector<std::size_t> TopNIndices(std::span<const double> row,
                                     std::size_t n) {
  if (n < 1 || n > row.size())
    Fail(ErrorKind::kInvalidArgument,
         "top-n out of range: n=" + std::to_string(n) +
             " width=" + std::to_string(row.size()));
  std::vector<std::size_t> idx(row.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n),
                    idx.end(), [&](std::size_t a, std::size_t b) {
                      if (row[a] != row[b]) return row[a] > row[b];
                      return a < b;
                    });
  idx.resize(n);
  return idx;
}

std::size_t Levenshtein(std::string_view ref, std::string_view hyp) {
  return Levenshtein<char>(std::span<const char>(ref.data(), ref.size()),
                           std::span<const char>(hyp.data(), hyp.size()));
}

std::vector<std::size_t> CollapseRepeatsAndBlanks(
    std::span<const std::size_t> ids, std::size_t blank) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i > 0 && ids[i] == ids[i - 1]) continue;
    if (ids[i] != blank) out.push_back(ids[i]);
  }
  return out;
}

}  // namespace xling
