// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <functional>
#include <random>

#include "doctest.h"
#include "test_support.h"
#include "xling/error.h"
#include "xling/numerics.h"

using namespace xling;

namespace {

// Exhaustive recursion over the three edit operations; exponential, so only
// for short strings.
std::size_t NaiveEditDistance(const std::vector<int> &a, std::size_t i, const std::vector<int> &b,
                              std::size_t j, std::map<std::pair<std::size_t, std::size_t>, std::size_t> *memo) {
  if (i == a.size()) return b.size() - j;
  if (j == b.size()) return a.size() - i;
  auto key = std::make_pair(i, j);
  if (auto it = memo->find(key); it != memo->end()) return it->second;
  std::size_t best = NaiveEditDistance(a, i + 1, b, j + 1, memo) + (a[i] == b[j] ? 0 : 1);
  best = std::min(best, NaiveEditDistance(a, i + 1, b, j, memo) + 1);
  best = std::min(best, NaiveEditDistance(a, i, b, j + 1, memo) + 1);
  return (*memo)[key] = best;
}

std::vector<int> Decode(std::size_t code, std::size_t len) {
  std::vector<int> s(len);
  for (auto &c : s) {
    c = static_cast<int>(code % 4);
    code /= 4;
  }
  return s;
}

}  // namespace

TEST_CASE("softmax examples") {
  auto a = Softmax(std::vector<double>{0.0, 0.0});
  CHECK(a[0] == doctest::Approx(0.5));
  CHECK(a[1] == doctest::Approx(0.5));
  auto b = Softmax(std::vector<double>{1000.0, 1000.0});
  CHECK(b[0] == doctest::Approx(0.5));
  CHECK(std::isfinite(b[1]));
  auto c = Softmax(std::vector<double>{0.0, std::log(3.0)});
  CHECK(c[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(c[1] == doctest::Approx(0.75).epsilon(1e-12));
  CHECK_THROWS_AS(Softmax(std::vector<double>{}), Error);
}

TEST_CASE("softmax rows sum to one for extreme logits") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-800.0, 800.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x(7);
    for (auto &v : x) v = u(rng);
    double sum = 0.0;
    for (double p : Softmax(x)) {
      CHECK(p >= 0.0);
      sum += p;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("kl divergence examples") {
  const std::vector<double> half{0.5, 0.5};
  CHECK(KlDivergenceFrame(half, half) == doctest::Approx(0.0));
  CHECK(KlDivergenceFrame(half, std::vector<double>{0.25, 0.75}) ==
        doctest::Approx(0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0)));
  CHECK(KlDivergenceFrame(half, std::vector<double>{0.25, 0.75}) == doctest::Approx(0.1438).epsilon(1e-3));
  CHECK(KlDivergenceFrame(std::vector<double>{1.0, 0.0}, half) == doctest::Approx(std::log(2.0)));
  CHECK_THROWS_AS(KlDivergenceFrame(half, std::vector<double>{1.0, 0.0, 0.0}), Error);
}

TEST_CASE("kl divergence clamps zero mapped mass") {
  // log(1e-8) bounds the penalty for a missed target token.
  const double kl = KlDivergenceFrame(std::vector<double>{1.0, 0.0}, std::vector<double>{0.0, 1.0});
  CHECK(kl == doctest::Approx(-std::log(kLogFloor)));
}

TEST_CASE("kl is non-negative and zero exactly on equal rows") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t d = 2 + trial % 9;
    const auto p = testing::RandomSimplex(rng, d);
    const auto q = testing::RandomSimplex(rng, d);
    CHECK(KlDivergenceFrame(p, q) > 0.0);
    CHECK(std::abs(KlDivergenceFrame(p, p)) < 1e-12);
  }
}

TEST_CASE("levenshtein examples") {
  CHECK(Levenshtein("abc", "abc") == 0);
  CHECK(Levenshtein("abc", "abd") == 1);
  CHECK(Levenshtein("kitten", "sitting") == 3);
  CHECK(Levenshtein("", "abc") == 3);
  CHECK(Levenshtein("abc", "") == 3);
}

TEST_CASE("levenshtein matches exhaustive recursion") {
  // Every string up to length 4 against every string up to length 4, plus
  // random pairs up to length 8.
  std::vector<std::vector<int>> all;
  for (std::size_t len = 0; len <= 4; ++len) {
    std::size_t count = 1;
    for (std::size_t i = 0; i < len; ++i) count *= 4;
    for (std::size_t code = 0; code < count; ++code) all.push_back(Decode(code, len));
  }
  for (const auto &a : all)
    for (const auto &b : all) {
      std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
      REQUIRE(Levenshtein<int>(a, b) == NaiveEditDistance(a, 0, b, 0, &memo));
    }
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 3000; ++trial) {
    const auto a = Decode(rng(), rng() % 9);
    const auto b = Decode(rng(), rng() % 9);
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
    REQUIRE(Levenshtein<int>(a, b) == NaiveEditDistance(a, 0, b, 0, &memo));
  }
}

TEST_CASE("top-n examples") {
  CHECK(TopNIndices(std::vector<double>{0.1, 0.7, 0.2}, 1) == std::vector<std::size_t>{1});
  CHECK(TopNIndices(std::vector<double>{0.4, 0.4, 0.2}, 1) == std::vector<std::size_t>{0});
  CHECK(TopNIndices(std::vector<double>{0.1, 0.7, 0.2}, 2) == std::vector<std::size_t>{1, 2});
  CHECK(TopNIndices(std::vector<double>{0.1, 0.7, 0.2}, 3) == std::vector<std::size_t>{1, 2, 0});
  CHECK_THROWS_AS(TopNIndices(std::vector<double>{0.5, 0.5}, 0), Error);
  CHECK_THROWS_AS(TopNIndices(std::vector<double>{0.5, 0.5}, 3), Error);
}

TEST_CASE("argmax breaks ties toward the lowest index") {
  CHECK(Argmax(std::vector<double>{0.2, 0.4, 0.4}) == 1);
  CHECK(Argmax(std::vector<double>{0.5, 0.5}) == 0);
}

TEST_CASE("collapse merges repeats before dropping blanks") {
  const std::vector<std::size_t> ids{1, 1, 0, 2, 2, 0, 0, 1, 0, 1};
  CHECK(CollapseRepeatsAndBlanks(ids, 0) == std::vector<std::size_t>{1, 2, 1, 1});
  CHECK(CollapseRepeatsAndBlanks(std::vector<std::size_t>{0, 0, 0}, 0).empty());
  CHECK(CollapseRepeatsAndBlanks(std::vector<std::size_t>{}, 0).empty());
}
