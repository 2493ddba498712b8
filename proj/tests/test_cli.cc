// SPDX-License-Identifier: Apache-2.0
// Runs the xling binary as a subprocess.
#include <sys/wait.h>

#include <array>
#include <cstdio>

#include "doctest.h"
#include "test_support.h"

using namespace xling;
using xling::testing::Slurp;
using xling::testing::TempDir;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code = -1;
  std::string out;
};

RunResult Run(const std::string &args) {
  const std::string cmd = std::string(XLING_CLI_PATH) + " " + args + " 2>/dev/null";
  RunResult r;
  FILE *pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string Q(const fs::path &p) { return "'" + p.string() + "'"; }

// One demo fixture shared by the tests in this binary.
const fs::path &Fixture() {
  static TempDir dir("cli_fixture");
  static const bool built = [] {
    const auto r = Run("synth --out " + Q(dir / "fx"));
    REQUIRE(r.code == 0);
    return true;
  }();
  (void)built;
  static const fs::path root = dir / "fx";
  return root;
}

std::string TrainArgs(const fs::path &out, const std::string &extra = "") {
  const FixtureLayout L{Fixture()};
  return "train-map --target tgt --target-posteriors " + Q(L.Posteriors("tgt", "train", "tgt")) +
         " --source rel=" + Q(L.Posteriors("tgt", "train", "rel")) +
         " --source unr=" + Q(L.Posteriors("tgt", "train", "unr")) +
         " --inventory " + Q(L.Inventory("tgt")) + " --out " + Q(out) +
         " --seed 3 " + (extra.find("--lr") == std::string::npos ? "--lr 0.01 " : "") + extra;
}

}  // namespace

TEST_CASE("synth builds three languages and is reproducible") {
  const FixtureLayout L{Fixture()};
  for (const char *lang : {"tgt", "rel", "unr"}) {
    CHECK(fs::exists(L.Inventory(lang)));
    CHECK(fs::exists(L.Manifest(lang, "train")));
    CHECK(fs::exists(L.AcousticModel(lang)));
  }
  TempDir again("cli_synth");
  REQUIRE(Run("synth --out " + Q(again / "fx")).code == 0);
  CHECK(testing::TreeContents(Fixture()) == testing::TreeContents(again / "fx"));
  REQUIRE(Run("synth --seed 99 --out " + Q(again / "fx2")).code == 0);
  CHECK(Slurp(L.Manifest("tgt", "train")) != Slurp(again / "fx2/tgt/train/manifest.jsonl"));
}

TEST_CASE("synth rejects a bad spec without writing") {
  TempDir dir("cli_badspec");
  REQUIRE(Run("synth --write-spec " + Q(dir / "spec.json")).code == 0);
  auto spec = ParseFixtureConfig(Slurp(dir / "spec.json"));
  spec.emission_stddev = -1.0;
  testing::Spit(dir / "bad.json", SerializeFixtureConfig(spec));
  CHECK(Run("synth --spec " + Q(dir / "bad.json") + " --out " + Q(dir / "out")).code == 2);
  CHECK_FALSE(fs::exists(dir / "out"));
  testing::Spit(dir / "junk.json", "{\"feature_dim\": ");
  CHECK(Run("synth --spec " + Q(dir / "junk.json") + " --out " + Q(dir / "out")).code == 2);
  CHECK_FALSE(fs::exists(dir / "out"));
  CHECK(Run("synth --spec " + Q(dir / "missing.json") + " --out " + Q(dir / "out")).code == 2);
  CHECK(Run("no-such-command").code == 2);
}

TEST_CASE("train-map outputs, resume and failures") {
  TempDir dir("cli_train");
  const auto full = Run(TrainArgs(dir / "full", "--epochs 4"));
  REQUIRE(full.code == 0);
  for (const char *f : {"model.xlck", "last.xlck", "history.jsonl", "train_state.xlts", "train_config.txt"})
    CHECK(fs::exists(dir / "full" / f));
  CHECK(full.out.find("best epoch") != std::string::npos);

  REQUIRE(Run(TrainArgs(dir / "split", "--epochs 2")).code == 0);
  REQUIRE(Run(TrainArgs(dir / "split", "--epochs 4 --resume")).code == 0);
  for (const char *f : {"model.xlck", "last.xlck", "history.jsonl", "train_state.xlts"})
    CHECK(Slurp(dir / "full" / f) == Slurp(dir / "split" / f));

  // The config file wins over flags.
  testing::Spit(dir / "cfg.txt", "epochs = 1\n");
  REQUIRE(Run(TrainArgs(dir / "cfg", "--epochs 9 --config " + Q(dir / "cfg.txt"))).code == 0);
  CHECK(Slurp(dir / "cfg/train_config.txt").find("epochs = 1\n") != std::string::npos);

  const FixtureLayout L{Fixture()};
  const std::string missing = "train-map --target-posteriors " + Q(L.Posteriors("tgt", "train", "tgt")) +
                              " --source rel=" + Q(dir / "nowhere") + " --inventory " +
                              Q(L.Inventory("tgt")) + " --out " + Q(dir / "m");
  CHECK(Run(missing).code == 3);
  CHECK_FALSE(fs::exists(dir / "m"));
  CHECK(Run(TrainArgs(dir / "bad", "--optimizer rmsprop")).code == 2);
  CHECK(Run(TrainArgs(dir / "bad", "--batch-size 0")).code == 2);
  CHECK(Run(TrainArgs(dir / "bad", "--config " + Q(dir / "nope.txt"))).code == 2);
  CHECK(Run(TrainArgs(dir / "nan", "--epochs 2 --lr 1e308 --clip-norm 0")).code == 4);
  CHECK_FALSE(fs::exists(dir / "nan"));
}

TEST_CASE("eval-map with the identity oracle is fully accurate") {
  TempDir dir("cli_eval");
  const FixtureLayout L{Fixture()};
  const auto r = Run("eval-map --target-posteriors " + Q(L.Posteriors("tgt", "test", "tgt")) +
                     " --source tgt=" + Q(L.Posteriors("tgt", "test", "tgt")) + " --out " +
                     Q(dir / "rep.jsonl"));
  REQUIRE(r.code == 0);
  CHECK(r.out.find("100.00   100.00   100.00   100.00") != std::string::npos);
  const auto reports = LoadAccuracyReports(dir / "rep.jsonl");
  REQUIRE(reports.size() == 1);
  for (const auto &[n, a] : reports[0].accuracy) CHECK(a == 1.0);
  CHECK(Run("eval-map --target-posteriors " + Q(L.Posteriors("tgt", "test", "tgt")) +
            " --source tgt=" + Q(L.Posteriors("tgt", "test", "tgt")) + " --n 0")
            .code == 2);
}

TEST_CASE("cipher and augment produce the expected plan") {
  TempDir dir("cli_aug");
  const FixtureLayout L{Fixture()};
  REQUIRE(Run(TrainArgs(dir / "m", "--epochs 3")).code == 0);
  const auto ckpt = dir / "m/model.xlck";
  REQUIRE(Run("eval-map --target-posteriors " + Q(L.Posteriors("tgt", "test", "tgt")) +
              " --source rel=" + Q(L.Posteriors("tgt", "test", "rel")) + " --source unr=" +
              Q(L.Posteriors("tgt", "test", "unr")) + " --checkpoint " + Q(ckpt) + " --refs " +
              Q(L.Manifest("tgt", "test")) + " --inventory " + Q(L.Inventory("tgt")) + " --out " +
              Q(dir / "rep.jsonl") + " --cer-out " + Q(dir / "cer.jsonl"))
              .code == 0);
  CHECK(fs::exists(dir / "cer.jsonl"));
  for (const char *src : {"rel", "unr"})
    REQUIRE(Run(std::string("cipher --manifest ") + Q(L.Manifest(src, "train")) + " --posteriors " +
                Q(L.Posteriors(src, "train", src)) + " --checkpoint " + Q(ckpt) + " --source " + src +
                " --inventory " + Q(L.Inventory("tgt")) + " --out " +
                Q(dir / (std::string(src) + ".jsonl")) + " --jobs 2")
                .code == 0);
  const std::string base = "augment --target tgt --manifest " + Q(L.Manifest("tgt", "train")) +
                           " --ciphered rel=" + Q(dir / "rel.jsonl") + " --ciphered unr=" +
                           Q(dir / "unr.jsonl") + " --reports " + Q(dir / "rep.jsonl");
  REQUIRE(Run(base + " --mode augAll --out " + Q(dir / "all.jsonl")).code == 0);
  const auto two = Run(base + " --mode augTwo --out " + Q(dir / "two.jsonl"));
  REQUIRE(two.code == 0);
  CHECK(two.out.find("closest rel") != std::string::npos);
  const auto all_plan = LoadManifest(dir / "all.jsonl");
  const auto two_plan = LoadManifest(dir / "two.jsonl");
  const std::size_t originals = LoadManifest(L.Manifest("tgt", "train")).size();
  const std::size_t per_source = LoadManifest(L.Manifest("rel", "train")).size();
  CHECK(all_plan.size() == originals + 2 * per_source);
  CHECK(two_plan.size() == originals + per_source);
  for (std::size_t i = originals; i < two_plan.size(); ++i)
    CHECK(two_plan.records[i].source_lang == "rel");
  CHECK(Run(base + " --mode augSome --out " + Q(dir / "x.jsonl")).code == 2);
  CHECK_FALSE(fs::exists(dir / "x.jsonl"));
}

TEST_CASE("decode prints the string a one-hot file was built from") {
  TempDir dir("cli_decode");
  const TokenInventory inv("tgt", {"<blk>", "h", "i", "_"}, 0);
  SaveInventory(inv, dir / "inv.jsonl");
  auto seq = testing::PeakedPosteriors({1, 1, 0, 2, 3, 3, 1, 0, 0, 2}, 4, 1.0, "demo");
  seq.lang_id = "tgt";
  WritePosteriors(seq, dir / "demo.xlpo");
  const auto r = Run("decode --inventory " + Q(dir / "inv.jsonl") + " --posteriors " +
                     Q(dir / "demo.xlpo") + " --out " + Q(dir / "hyp.tsv"));
  REQUIRE(r.code == 0);
  CHECK(r.out == "demo\thi hi\n");
  CHECK(Slurp(dir / "hyp.tsv") == r.out);

  testing::Spit(dir / "ref.tsv", "demo\thi_ho\n");
  const auto c = Run("cer --refs " + Q(dir / "ref.tsv") + " --hyps " + Q(dir / "hyp.tsv") +
                     " --out " + Q(dir / "cer.json"));
  REQUIRE(c.code == 0);
  CHECK(c.out.find("20.00") != std::string::npos);  // 1 edit over 5 characters
  testing::Spit(dir / "ref2.tsv", "other\tx\n");
  CHECK(Run("cer --refs " + Q(dir / "ref2.tsv") + " --hyps " + Q(dir / "hyp.tsv")).code == 3);
  testing::Spit(dir / "bad.xlpo", "XLPO");
  CHECK(Run("decode --inventory " + Q(dir / "inv.jsonl") + " --posteriors " + Q(dir / "bad.xlpo")).code == 3);
}
