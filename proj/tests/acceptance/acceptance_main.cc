// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit status if
// any criterion fails. Runs single-threaded unless stated otherwise.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "test_support.h"
#include "xling/numerics.h"

using namespace xling;
using namespace xling::testing;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void Expect(bool ok, const std::string &what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

template <typename... Args>
std::string Fmt(const char *fmt, Args... args) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), fmt, args...);
  return buf;
}

// --- criterion 1 -----------------------------------------------------------

double MeanFrameKl(const MesdModel &m, const LangId &lang, const PosteriorSequence &in,
                   const PosteriorSequence &target) {
  const auto out = Forward(m, lang, in).posteriors;
  double sum = 0.0;
  for (std::size_t t = 0; t < target.num_frames(); ++t)
    sum += KlDivergenceFrame(target.frames.row(t), out.frames.row(t));
  return sum / static_cast<double>(target.num_frames());
}

Verdict GradientCheck() {
  Verdict v;
  const auto start = Clock::now();
  const auto inv = SmallInventory("tgt", 5);
  double worst = 0.0;
  std::size_t checked = 0;
  for (std::uint64_t seed : {101u, 202u, 303u}) {
    MesdModel model = InitModel(inv, {{"s1", 5}, {"s2", 6}}, 4, seed);
    for (auto &t : ParameterTensors(model))
      for (double &x : t.values) x *= 2.0;
    std::mt19937_64 rng(seed);
    for (const LangId lang : {"s1", "s2"}) {
      const auto in = RandomPosteriors(rng, lang, "u", 4, lang == "s1" ? 5 : 6);
      const auto target = RandomPosteriors(rng, "tgt", "u", 4, 5);
      const auto analytic = Backward(model, lang, in, target);
      auto params = ParameterTensors(model);
      const auto grads = ParameterTensors(analytic.gradients);
      const double h = 1e-5;
      for (std::size_t i = 0; i < params.size(); ++i)
        for (std::size_t k = 0; k < params[i].values.size(); ++k) {
          double &p = params[i].values[k];
          const double saved = p;
          p = saved + h;
          const double up = MeanFrameKl(model, lang, in, target);
          p = saved - h;
          const double down = MeanFrameKl(model, lang, in, target);
          p = saved;
          const double numeric = (up - down) / (2 * h);
          const double a = grads[i].values[k];
          worst = std::max(worst, std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6}));
          ++checked;
        }
    }
  }
  const double secs = Seconds(start);
  v.Expect(worst < 1e-4, "relative error");
  v.Expect(secs < 10.0, "runtime");
  v.detail << Fmt("%zu partials, worst relative error %.2e, %.2f s", checked, worst, secs);
  return v;
}

// --- criterion 2 -----------------------------------------------------------

Verdict LossAlgebra() {
  Verdict v;
  std::mt19937_64 rng(2024);
  std::size_t bad_kl = 0;
  double min_kl = 1e300, max_self = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t d = 2 + trial % 15;
    const auto p = RandomSimplex(rng, d);
    const auto q = RandomSimplex(rng, d);
    const double kl = KlDivergenceFrame(p, q), self = KlDivergenceFrame(p, p);
    min_kl = std::min(min_kl, kl);
    max_self = std::max(max_self, std::abs(self));
    if (!(kl > 0.0) || std::abs(self) > 1e-12) ++bad_kl;
  }
  v.Expect(bad_kl == 0, "KL sign / zero");

  const auto w = RankSumWeights({{"a", 3.0}, {"b", 2.0}, {"c", 1.0}});
  v.Expect(w.at("a") == 0.5 && w.at("b") == 1.0 / 3.0 && w.at("c") == 1.0 / 6.0, "K=3 weights");

  std::size_t bad_sum = 0, bad_order = 0;
  std::uniform_real_distribution<double> u(0.0, 4.0);
  for (int trial = 0; trial < 2000; ++trial) {
    std::map<LangId, double> losses;
    const int k = 1 + trial % 9;
    for (int i = 0; i < k; ++i) losses["l" + std::to_string(i)] = trial % 2 ? std::round(u(rng)) : u(rng);
    const auto wk = RankSumWeights(losses);
    double sum = 0.0;
    for (const auto &[l, x] : wk) sum += x;
    if (std::abs(sum - 1.0) > 1e-12) ++bad_sum;
    for (const auto &[la, wa] : wk)
      for (const auto &[lb, wb] : wk)
        if (losses.at(la) > losses.at(lb) && wa < wb) ++bad_order;
  }
  v.Expect(bad_sum == 0, "weights sum");
  v.Expect(bad_order == 0, "weight order");
  v.detail << Fmt("1000 KL pairs (min %.2e, max |KL(p,p)| %.1e); K=3 -> {%.17g, %.17g, %.17g}; ",
                  min_kl, max_self, w.at("a"), w.at("b"), w.at("c"))
           << Fmt("2000 random weightings: %zu sum / %zu order violations", bad_sum, bad_order);
  return v;
}

// --- criterion 3 -----------------------------------------------------------

// Full-table edit distance, written independently of the library's two-row DP.
std::size_t TableDistance(const std::vector<int> &a, const std::vector<int> &b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i)
    for (std::size_t j = 1; j <= b.size(); ++j)
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] != b[j - 1])});
  return d[a.size()][b.size()];
}

std::vector<std::vector<int>> AllStrings(std::size_t max_len) {
  std::vector<std::vector<int>> out{{}};
  std::size_t begin = 0;
  for (std::size_t len = 1; len <= max_len; ++len) {
    const std::size_t end = out.size();
    for (std::size_t i = begin; i < end; ++i)
      for (int c = 0; c < 4; ++c) {
        auto s = out[i];
        s.push_back(c);
        out.push_back(std::move(s));
      }
    begin = end;
  }
  return out;
}

std::vector<std::size_t> ReferenceCollapse(const std::vector<std::size_t> &ids, std::size_t blank) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < ids.size(); ++i)
    if ((i == 0 || ids[i] != ids[i - 1]) && ids[i] != blank) out.push_back(ids[i]);
  return out;
}

Verdict MetricOracles(const std::vector<AccuracyReport> &fixture_reports, std::size_t target_dim) {
  Verdict v;
  // Every pair of strings up to length 5, and every string up to length 8
  // against 40 probes spanning lengths 0..8.
  std::size_t pairs = 0, lev_bad = 0;
  const auto short_strings = AllStrings(5);
  for (const auto &a : short_strings)
    for (const auto &b : short_strings) {
      lev_bad += Levenshtein<int>(a, b) != TableDistance(a, b);
      ++pairs;
    }
  const auto all = AllStrings(8);
  std::mt19937_64 rng(33);
  std::vector<std::vector<int>> probes;
  for (int i = 0; i < 40; ++i) probes.push_back(all[rng() % all.size()]);
  probes.push_back({});
  for (const auto &a : all)
    for (const auto &b : probes) {
      lev_bad += Levenshtein<int>(a, b) != TableDistance(a, b);
      lev_bad += Levenshtein<int>(b, a) != TableDistance(b, a);
      pairs += 2;
    }
  v.Expect(lev_bad == 0, "levenshtein");

  std::size_t collapse_bad = 0;
  for (int trial = 0; trial < 20000; ++trial) {
    std::vector<std::size_t> ids(rng() % 13);
    for (auto &x : ids) x = rng() % 5;
    collapse_bad += CollapseRepeatsAndBlanks(ids, trial % 5) != ReferenceCollapse(ids, trial % 5);
  }
  v.Expect(collapse_bad == 0, "collapse");

  std::vector<AccuracyReport> reports = fixture_reports;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<PosteriorSequence> mapped, target;
    for (int i = 0; i < 4; ++i) {
      mapped.push_back(RandomPosteriors(rng, "t", "u", 12, 6));
      target.push_back(RandomPosteriors(rng, "t", "u", 12, 6));
    }
    reports.push_back(MappingAccuracy(mapped, target, {1, 2, 3, 4, 5, 6}, "t", "rand"));
  }
  std::size_t monotone_bad = 0, full_bad = 0;
  for (const auto &r : reports) {
    double prev = -1.0;
    for (const auto &[n, a] : r.accuracy) {
      monotone_bad += a < prev;
      prev = a;
    }
    const std::size_t d = r.source_lang == "rand" ? 6 : target_dim;
    full_bad += !r.accuracy.count(d) || r.accuracy.at(d) != 1.0;
  }
  v.Expect(monotone_bad == 0, "top-n monotone");
  v.Expect(full_bad == 0, "top-n at d_A");
  v.detail << Fmt("%zu levenshtein pairs, 20000 collapse sequences, %zu reports monotone and 1.0 at n=d_A",
                  pairs, reports.size());
  return v;
}

// --- pipeline shared by criteria 3-6 ----------------------------------------

struct Pipeline {
  double seconds = 0.0;
  FixtureRun run;
  std::vector<AccuracyReport> reports;  // rel, unr at n = 1, 2, 5, 10
  std::map<LangId, double> cer;
  double cer_uniform = 0.0, cer_random = 0.0;
  AugmentationPlan plan;
  fs::path plan_path, checkpoint_path, history_path;
};

Pipeline RunPipeline(const fs::path &root, std::size_t jobs) {
  Pipeline p;
  const auto start = Clock::now();
  p.run = RunFixture(root / "fixture", 3, jobs);
  const auto &L = p.run.layout;
  const auto &inv = p.run.target_inventory;
  const auto &model = p.run.state.best_model;

  const auto test_target = ReadPosteriorDir(L.Posteriors("tgt", "test", "tgt"));
  std::vector<PosteriorSequence> targets;
  for (const auto &[u, s] : test_target) targets.push_back(s);
  const auto test_manifest = LoadManifest(L.Manifest("tgt", "test"));
  std::map<std::string, std::string> refs;
  for (const auto &r : test_manifest.records) refs[r.utt_id] = r.transcript;

  std::vector<PosteriorSequence> rel_inputs;
  for (const LangId src : {"rel", "unr"}) {
    const auto dir = ReadPosteriorDir(L.Posteriors("tgt", "test", src));
    std::vector<PosteriorSequence> inputs, mapped;
    for (const auto &t : targets) inputs.push_back(dir.at(t.utt_id));
    for (const auto &s : inputs) mapped.push_back(Forward(model, src, s).posteriors);
    p.reports.push_back(MappingAccuracy(mapped, targets, {1, 2, 5, 10}, "tgt", src));
    p.cer[src] = CrossLingualEval(inputs, model, src, refs, inv, jobs).cer_percent;
    if (src == "rel") rel_inputs = inputs;
  }

  // Baselines: uniform rows, and rows drawn uniformly from the simplex.
  std::mt19937_64 rng(77);
  std::vector<std::string> r, h_uniform, h_random;
  for (const auto &t : targets) {
    PosteriorSequence flat{"tgt", t.utt_id, Matrix(t.num_frames(), inv.size())};
    for (double &x : flat.frames.values()) x = 1.0 / static_cast<double>(inv.size());
    r.push_back(refs.at(t.utt_id));
    h_uniform.push_back(GreedyDecode(flat, inv).text);
    h_random.push_back(GreedyDecode(RandomPosteriors(rng, "tgt", t.utt_id, t.num_frames(), inv.size()), inv).text);
  }
  p.cer_uniform = ComputeCer(r, h_uniform).cer_percent;
  p.cer_random = ComputeCer(r, h_random).cer_percent;

  std::map<LangId, std::vector<CipherOutput>> ciphered;
  for (const LangId src : {"rel", "unr"})
    ciphered[src] = CipherCorpus(LoadManifest(L.Manifest(src, "train")),
                                 ReadPosteriorDir(L.Posteriors(src, "train", src)), model, src, inv, jobs);
  p.plan = BuildAugmentationPlan("tgt", LoadManifest(L.Manifest("tgt", "train")), ciphered,
                                 AugMode::kAugTwo, p.reports);
  p.plan_path = root / "plan.jsonl";
  SaveManifest(p.plan.manifest, p.plan_path);
  p.checkpoint_path = root / "model.xlck";
  SaveCheckpoint(model, p.checkpoint_path);
  p.history_path = root / "history.jsonl";
  Spit(p.history_path, HistoryToJsonl(p.run.state.history));
  p.seconds = Seconds(start);
  return p;
}

// --- criterion 4 -----------------------------------------------------------

Verdict EndToEnd(const Pipeline &p) {
  Verdict v;
  const auto &hist = p.run.state.history;
  const double dev0 = hist.front().dev_loss, dev_last = hist.back().dev_loss;
  const double drop = 1.0 - dev_last / dev0;
  double min_am = 1.0;
  for (const auto &[lang, acc] : p.run.summary.test_accuracy) min_am = std::min(min_am, acc);
  const double acc_rel = p.reports[0].accuracy.at(1), acc_unr = p.reports[1].accuracy.at(1);
  const double baseline = std::min(p.cer_uniform, p.cer_random);
  const std::string closest = p.plan.closest_lang.value_or("-");

  v.Expect(p.seconds < 300.0, "runtime");
  v.Expect(min_am >= 0.9, "toy AM accuracy");
  v.Expect(hist.size() == 21, "20 epochs");
  v.Expect(drop >= 0.5, "(a) dev loss drop");
  v.Expect(acc_rel > acc_unr, "(b) relatedness");
  v.Expect(baseline - p.cer.at("rel") >= 30.0, "(c) CER vs baseline");
  v.Expect(closest == "rel", "(d) augTwo choice");
  v.detail << Fmt("%.1f s; AM acc >= %.3f; (a) dev L_A %.3f -> %.3f (-%.1f%%); ", p.seconds, min_am,
                  dev0, dev_last, 100.0 * drop)
           << Fmt("(b) n=1 rel %.2f%% vs unr %.2f%%; ", 100.0 * acc_rel, 100.0 * acc_unr)
           << Fmt("(c) CER rel %.2f / unr %.2f vs baseline %.2f (uniform %.2f, random %.2f); ",
                  p.cer.at("rel"), p.cer.at("unr"), baseline, p.cer_uniform, p.cer_random)
           << "(d) augTwo picks " << closest;
  return v;
}

// --- criterion 5 -----------------------------------------------------------

double ToyAmCer(const ToyAcousticModel &am, const CorpusManifest &test, const TokenInventory &inv) {
  std::vector<std::string> refs, hyps;
  for (const auto &r : test.records) {
    refs.push_back(r.transcript);
    hyps.push_back(GreedyDecode(ApplyToyAm(am, ReadFeatures(r.feature_file)), inv).text);
  }
  return ComputeCer(refs, hyps).cer_percent;
}

bool SameRecord(const ManifestRecord &a, const ManifestRecord &b) {
  return a.utt_id == b.utt_id && a.lang_id == b.lang_id &&
         fs::absolute(a.feature_file).lexically_normal() == fs::absolute(b.feature_file).lexically_normal() &&
         a.transcript == b.transcript && a.duration_frames == b.duration_frames && a.phones == b.phones &&
         a.frame_labels == b.frame_labels && a.ciphered == b.ciphered && a.source_lang == b.source_lang &&
         a.empty == b.empty;
}

Verdict AugmentationLoop(const Pipeline &p) {
  Verdict v;
  const auto &L = p.run.layout;
  const auto &inv = p.run.target_inventory;
  const auto loaded = LoadManifest(p.plan_path);
  bool same = loaded.size() == p.plan.manifest.size();
  for (std::size_t i = 0; same && i < loaded.size(); ++i)
    same = SameRecord(loaded.records[i], p.plan.manifest.records[i]);
  v.Expect(same, "plan round-trip");

  const auto train = LoadManifest(L.Manifest("tgt", "train"));
  const auto test = LoadManifest(L.Manifest("tgt", "test"));
  ToyAmOptions am = DemoFixtureConfig().am;
  am.seed = 4242;
  const double base = ToyAmCer(TrainToyAm(train, inv, am).model, test, inv);
  const double aug = ToyAmCer(TrainToyAm(loaded, inv, am).model, test, inv);
  // The fixture's own target AM, for reference.
  const double fixture_am = ToyAmCer(LoadToyAm(L.AcousticModel("tgt")), test, inv);
  v.Expect(aug - base <= 2.0, "CER degradation");
  v.detail << Fmt("plan %zu records (%zu ciphered from %s) round-trips; target CER %.2f -> %.2f "
                  "with augTwo (fixture AM %.2f)",
                  loaded.size(), p.plan.AugmentedRecords().size(), p.plan.closest_lang.value_or("-").c_str(),
                  base, aug, fixture_am);
  return v;
}

// --- criterion 6 -----------------------------------------------------------

// Applies `mutate` to a copy of `bytes` many times; every decode must either
// succeed or throw xling::Error. Returns {typed errors, successes, other}.
std::array<std::size_t, 3> Fuzz(const std::string &bytes, const std::function<void(std::string_view)> &decode,
                                std::uint64_t seed, int trials) {
  std::array<std::size_t, 3> counts{};
  std::mt19937_64 rng(seed);
  for (int t = 0; t < trials; ++t) {
    std::string b = bytes;
    switch (t % 3) {
      case 0: b[rng() % b.size()] ^= static_cast<char>(1 + rng() % 255); break;
      case 1: b.resize(rng() % b.size()); break;
      default: b.insert(rng() % b.size(), 1 + rng() % 8, static_cast<char>(rng())); break;
    }
    try {
      decode(b);
      ++counts[1];
    } catch (const Error &) {
      ++counts[0];
    } catch (...) {
      ++counts[2];
    }
  }
  return counts;
}

Verdict DeterminismAndFormats(const Pipeline &a, const Pipeline &b) {
  Verdict v;
  v.Expect(Slurp(a.checkpoint_path) == Slurp(b.checkpoint_path), "checkpoint bytes");
  v.Expect(Slurp(a.history_path) == Slurp(b.history_path), "history bytes");
  // Plans hold paths relative to their own directory, so equal bytes mean
  // equal content across the two roots.
  v.Expect(Slurp(a.plan_path) == Slurp(b.plan_path), "plan bytes");

  // Bit-exact round-trips.
  const auto posts = ReadPosteriorDir(a.run.layout.Posteriors("tgt", "test", "rel"));
  // Rows of dyadic values summing to exactly 1 survive read-side
  // renormalization unchanged, so these must round-trip bit for bit.
  std::mt19937_64 rng(6);
  std::size_t xlpo_bad = 0, dyadic = 0;
  for (int trial = 0; trial < 200; ++trial, ++dyadic) {
    const std::size_t d = 2 + rng() % 12, frames = 1 + rng() % 20;
    PosteriorSequence s{"tgt", "d" + std::to_string(trial), Matrix(frames, d)};
    for (std::size_t t = 0; t < frames; ++t) {
      auto row = s.frames.row(t);
      std::uint32_t left = 1u << 16;
      for (std::size_t k = 0; k + 1 < d; ++k) {
        const std::uint32_t take = static_cast<std::uint32_t>(rng() % (left + 1));
        row[k] = std::ldexp(static_cast<double>(take), -16);
        left -= take;
      }
      row[d - 1] = std::ldexp(static_cast<double>(left), -16);
    }
    const auto bytes = EncodePosteriors(s);
    const auto back = DecodePosteriors(bytes);
    xlpo_bad += !std::ranges::equal(back.frames.values(), s.frames.values()) || EncodePosteriors(back) != bytes;
  }
  // Fixture files: stored f32 values are reproduced up to renormalization
  // rounding, and re-encoding reproduces the file.
  double worst_shift = 0.0;
  for (const auto &[u, s] : posts) {
    const auto file = Slurp(PosteriorPath(a.run.layout.Posteriors("tgt", "test", "rel"), u));
    const auto again = DecodePosteriors(EncodePosteriors(s));
    for (std::size_t i = 0; i < s.frames.values().size(); ++i)
      worst_shift = std::max(worst_shift, std::abs(again.frames.values()[i] - s.frames.values()[i]));
    xlpo_bad += !std::ranges::equal(DecodePosteriors(file).frames.values(), s.frames.values());
  }
  v.Expect(xlpo_bad == 0, "xlpo round-trip");
  v.Expect(worst_shift <= 1e-6, "xlpo renormalization drift");
  const auto ck = Slurp(a.checkpoint_path);
  const auto model = DecodeCheckpoint(ck);
  v.Expect(model == a.run.state.best_model && EncodeCheckpoint(model) == ck, "checkpoint round-trip");

  // Corruption.
  const std::string xlpo = EncodePosteriors(posts.begin()->second);
  const auto f_xlpo = Fuzz(xlpo, [](std::string_view s) { DecodePosteriors(s); }, 1, 3000);
  const auto f_ck = Fuzz(ck, [](std::string_view s) { DecodeCheckpoint(s); }, 2, 3000);
  const auto f_st = Fuzz(EncodeTrainState(a.run.state), [](std::string_view s) { DecodeTrainState(s); }, 3, 600);
  const auto f_inv = Fuzz(SerializeInventory(a.run.target_inventory),
                          [](std::string_view s) { ParseInventory(s); }, 4, 3000);
  v.Expect(f_xlpo[2] + f_ck[2] + f_st[2] + f_inv[2] == 0, "untyped failure");
  // Checksummed formats must reject every mutation.
  v.Expect(f_ck[1] == 0 && f_st[1] == 0, "checksum coverage");
  const auto truncated = ck.substr(0, ck.size() / 2);
  v.Expect(KindOf([&] { DecodeCheckpoint(truncated); }) != ErrorKind::kIo, "truncated checkpoint");

  v.detail << "checkpoint, history and plan byte-identical across runs (jobs 1 vs 4); "
           << dyadic << " dyadic xlpo sequences and 1 checkpoint round-trip bit-exactly; "
           << Fmt("%zu fixture xlpo files re-read with drift <= %.1e; ", posts.size(), worst_shift)
           << Fmt("typed rejections xlpo %zu/3000, checkpoint %zu/3000, state %zu/600, inventory %zu/3000, "
                  "untyped 0 expected got %zu",
                  f_xlpo[0], f_ck[0], f_st[0], f_inv[0], f_xlpo[2] + f_ck[2] + f_st[2] + f_inv[2]);
  return v;
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const char *name, const std::function<Verdict()> &fn) {
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception &e) {
      v.pass = false;
      v.detail << "exception: " << e.what();
    }
    failures += !v.pass;
    std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << name << "): "
              << v.detail.str() << std::endl;
  };

  TempDir work_a("acceptance_a"), work_b("acceptance_b");
  std::optional<Pipeline> first, second;
  std::string pipeline_error;
  try {
    first = RunPipeline(work_a.path(), 1);
  } catch (const std::exception &e) {
    pipeline_error = e.what();
  }
  auto need = [&](const std::optional<Pipeline> &p) -> const Pipeline & {
    if (!p) throw std::runtime_error("pipeline failed: " + pipeline_error);
    return *p;
  };

  report(1, "gradient correctness", GradientCheck);
  report(2, "loss and weighting algebra", LossAlgebra);
  report(3, "metric oracles", [&] {
    return MetricOracles(need(first).reports, need(first).run.target_inventory.size());
  });
  report(4, "end-to-end fixture run", [&] { return EndToEnd(need(first)); });
  report(5, "augmentation loop closure", [&] { return AugmentationLoop(need(first)); });
  report(6, "determinism and formats", [&] {
    second = RunPipeline(work_b.path(), 4);
    return DeterminismAndFormats(need(first), *second);
  });

  std::cout << (failures == 0 ? "ALL CRITERIA PASS" : std::to_string(failures) + " CRITERIA FAIL")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
