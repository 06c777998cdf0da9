// Copyright 2026  The antispoof Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <filesystem>
#include <memory>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "antispoof/dataio.h"
#include "commands.h"
#include "doctest.h"
#include "temp_dir.h"

using namespace antispoof;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult RunCli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::Run(args, out, err);
  return {code, out.str(), err.str()};
}

std::size_t CountFiles(const fs::path& dir, const std::string& extension) {
  if (!fs::exists(dir)) return 0;
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == extension) ++n;
  return n;
}

std::size_t CountLines(const fs::path& path) {
  std::ifstream in(path);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) ++n;
  return n;
}

// A synthetic corpus written by `antispoof synth`, with its config file.
class Toy {
 public:
  Toy(std::size_t speakers, std::size_t bonafide, std::size_t spoof, std::size_t attacks) {
    const auto r = RunCli({"synth", "--output", dir_.path().string(), "--speakers",
                           std::to_string(speakers), "--eval-speakers", "2", "--bonafide",
                           std::to_string(bonafide), "--spoof", std::to_string(spoof),
                           "--attacks", std::to_string(attacks), "--seed", "5"});
    REQUIRE_MESSAGE(r.code == 0, r.err);
  }

  // Runs the CLI with this corpus' config and small toy model settings.
  CliResult Run(std::vector<std::string> args) const {
    std::vector<std::string> full = {"--config", (dir_ / "config.ini").string(),
                                     "--set", "model.width_multiplier=0.125",
                                     "--set", "train.max_epochs=1",
                                     "--set", "train.batch_size=16",
                                     "--set", "train.sinc_learning_rates=1e-4",
                                     "--set", "train.sinc_batches_per_epoch=2",
                                     "--set", "train.sinc_valid_batches=1",
                                     "--set", "train.chunk_pairs=2",
                                     "--set", "eval.shift_samples=1600"};
    full.insert(full.end(), args.begin(), args.end());
    return RunCli(full);
  }

  fs::path operator/(const std::string& name) const { return dir_ / name; }
  const fs::path& path() const { return dir_.path(); }

 private:
  testing_support::TempDir dir_;
};

// 3 training speakers with 3 bonafide and 2 x 2 spoof utterances each;
// extracted once and shared by the tests below.
const Toy& Extracted() {
  static const auto toy = std::make_unique<Toy>(3, 3, 2, 2);
  return *toy;
}

const Toy& ExtractedToy() {
  static bool done = false;
  const Toy& toy = Extracted();
  if (!done) {
    const auto r = toy.Run({"extract"});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    done = true;
  }
  return toy;
}

}  // namespace

TEST_CASE("help and defaults exit 0, bad usage exits 2") {
  CHECK(RunCli({"--help"}).code == 0);
  const auto defaults = RunCli({"defaults"});
  CHECK(defaults.code == 0);
  CHECK(defaults.out.find("[features]") != std::string::npos);
  CHECK(defaults.out.find("cqt_bins_per_octave = 32") != std::string::npos);
  CHECK(RunCli({}).code == 2);
  CHECK(RunCli({"frobnicate"}).code == 2);
  CHECK(RunCli({"train", "--no-such-flag"}).code == 2);
}

TEST_CASE("config file, --set and flags override in order") {
  testing_support::TempDir dir;
  dataio::WriteFile(dir / "c.ini",
                    "; comment\n[run]\nseed = 11\n[model]\nkind = lcnn\nwidth_multiplier = 0.5\n");
  auto r = RunCli({"--config", (dir / "c.ini").string(), "show-config"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("seed = 11") != std::string::npos);
  CHECK(r.out.find("kind = lcnn") != std::string::npos);

  r = RunCli({"--config", (dir / "c.ini").string(), "--set", "run.seed=12", "show-config"});
  CHECK(r.out.find("seed = 12") != std::string::npos);
  r = RunCli({"--config", (dir / "c.ini").string(), "--set", "run.seed=12", "--seed", "13",
              "show-config"});
  CHECK(r.out.find("seed = 13") != std::string::npos);
  // Global flags may also follow the subcommand.
  r = RunCli({"--config", (dir / "c.ini").string(), "show-config", "--deterministic"});
  CHECK(r.out.find("deterministic = true") != std::string::npos);
}

TEST_CASE("config errors exit 2") {
  testing_support::TempDir dir;
  dataio::WriteFile(dir / "bad.ini", "[model]\ncolour = blue\n");
  auto r = RunCli({"--config", (dir / "bad.ini").string(), "show-config"});
  CHECK(r.code == 2);
  CHECK(r.err.find("model.colour") != std::string::npos);
  CHECK(RunCli({"--config", (dir / "missing.ini").string(), "show-config"}).code == 2);
  CHECK(RunCli({"--set", "model.kind=resnet", "show-config"}).code == 2);
  CHECK(RunCli({"--set", "train.batch_size=many", "show-config"}).code == 2);
  CHECK(RunCli({"--set", "novalue", "show-config"}).code == 2);
}

TEST_CASE("extract writes one cache per utterance and kind and is idempotent") {
  Toy toy(2, 3, 1, 1);
  // Three utterances of the training protocol.
  const auto full = dataio::ReadProtocol(toy / "train.txt", Partition::kTrain);
  ProtocolSet three;
  three.records.assign(full.records.begin(), full.records.begin() + 3);
  dataio::WriteProtocol(three, toy / "three.txt");

  auto r = toy.Run({"extract", "--protocol", (toy / "three.txt").string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(CountFiles(toy / "cache" / "spec", ".afc") == 3);
  CHECK(CountFiles(toy / "cache" / "cqt", ".afc") == 3);
  CHECK(r.out.find("6 cache file(s) written") != std::string::npos);

  const auto before = fs::last_write_time(toy / "cache" / "spec" / (three.records[0].utt_id + ".afc"));
  r = toy.Run({"extract", "--protocol", (toy / "three.txt").string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("0 cache file(s) written, 6 up to date") != std::string::npos);
  CHECK(fs::last_write_time(toy / "cache" / "spec" / (three.records[0].utt_id + ".afc")) ==
        before);

  // A changed feature setting invalidates exactly the affected kind.
  r = toy.Run({"--set", "features.cqt_q_scale=0.5", "extract", "--protocol",
               (toy / "three.txt").string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("3 cache file(s) written, 3 up to date") != std::string::npos);

  const auto manifest =
      nlohmann::json::parse(dataio::ReadFile(toy / "cache" / "extract.manifest.json"));
  CHECK(manifest["seed"] == 5);
  CHECK(manifest["config"]["features"]["cqt_q_scale"] == "0.5");
  CHECK(manifest["inputs"]["protocol_0"]["sha256"].get<std::string>().size() == 64);
}

TEST_CASE("extract lists corrupt and missing audio and exits nonzero") {
  Toy toy(2, 3, 1, 1);
  const auto protocol = dataio::ReadProtocol(toy / "train.txt", Partition::kTrain);
  const std::string corrupt = protocol.records[1].utt_id;
  const std::string missing = protocol.records[2].utt_id;
  dataio::WriteFile(dataio::AudioPath(toy / "audio", corrupt), "not a wav file");
  fs::remove(dataio::AudioPath(toy / "audio", missing));

  const auto r = toy.Run({"extract", "--protocol", (toy / "train.txt").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find(corrupt + ":") != std::string::npos);
  CHECK(r.err.find(missing + ": missing audio file") != std::string::npos);
  // Every other utterance is still cached.
  CHECK(CountFiles(toy / "cache" / "spec", ".afc") == protocol.records.size() - 2);
}

TEST_CASE("train without a cache gives an actionable error") {
  Toy toy(2, 3, 1, 1);
  const auto r = toy.Run({"train"});
  CHECK(r.code == 2);
  CHECK(r.err.find("run `antispoof extract`") != std::string::npos);
  CHECK_FALSE(fs::exists(toy / "run" / "last.ckpt"));
}

TEST_CASE("train, score and evaluate a VGG model") {
  const Toy& toy = ExtractedToy();
  auto r = toy.Run({"train", "--output-dir", (toy / "vgg").string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  for (const char* f : {"model.ckpt", "last.ckpt", "history.csv", "manifest.json"})
    CHECK(fs::exists(toy / "vgg" / f));
  const std::string history = dataio::ReadFile(toy / "vgg" / "history.csv");
  CHECK(history.rfind("epoch,train_loss,valid_loss,lr\n", 0) == 0);
  CHECK(CountLines(toy / "vgg" / "history.csv") == 2);

  const auto manifest = nlohmann::json::parse(dataio::ReadFile(toy / "vgg" / "manifest.json"));
  CHECK(manifest["command"] == "train");
  CHECK(manifest["seed"] == 5);
  CHECK(manifest["model"]["kind"] == "vgg");
  CHECK(manifest["model"]["input_channels"] == 2);
  CHECK(manifest["inputs"].contains("train_protocol"));
  CHECK(manifest["inputs"].contains("features"));
  CHECK(manifest["split"]["train"].size() + manifest["split"]["valid"].size() == 3);

  const std::string model = (toy / "vgg" / "model.ckpt").string();
  r = toy.Run({"score", "--model", model, "--output", (toy / "vgg" / "s1.txt").string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto eval_protocol = dataio::ReadProtocol(toy / "eval.txt", Partition::kEval);
  CHECK(CountLines(toy / "vgg" / "s1.txt") == eval_protocol.records.size());
  CHECK(fs::exists(toy / "vgg" / "s1.txt.manifest.json"));

  r = toy.Run({"score", "--model", model, "--output", (toy / "vgg" / "s2.txt").string()});
  REQUIRE(r.code == 0);
  CHECK(dataio::ReadFile(toy / "vgg" / "s1.txt") == dataio::ReadFile(toy / "vgg" / "s2.txt"));

  // A model trained on other features is refused.
  r = toy.Run({"--set", "features.log_floor=1e-6", "score", "--model", model, "--output",
               (toy / "vgg" / "s3.txt").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("feature configuration mismatch") != std::string::npos);
  CHECK_FALSE(fs::exists(toy / "vgg" / "s3.txt"));

  r = toy.Run({"eval", "--scores", (toy / "vgg" / "s1.txt").string(), "--output",
               (toy / "vgg" / "report").string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(r.out.find("pooled: EER") != std::string::npos);
  const std::string csv = dataio::ReadFile(toy / "vgg" / "report.csv");
  CHECK(csv.rfind("condition,bonafide,spoof,eer,min_tdcf\npooled,", 0) == 0);
  CHECK(csv.find("\nA01,") != std::string::npos);
  CHECK(csv.find("\nA02,") != std::string::npos);
}

TEST_CASE("same seed in deterministic mode gives identical training output") {
  const Toy& toy = ExtractedToy();
  for (const char* dir : {"det1", "det2"}) {
    const auto r = toy.Run({"--deterministic", "train", "--output-dir", (toy / dir).string()});
    REQUIRE_MESSAGE(r.code == 0, r.err);
  }
  for (const char* f : {"history.csv", "model.ckpt"})
    CHECK(dataio::ReadFile(toy / "det1" / f) == dataio::ReadFile(toy / "det2" / f));
  const auto r = toy.Run({"--deterministic", "--seed", "6", "train", "--output-dir",
                          (toy / "det3").string()});
  REQUIRE(r.code == 0);
  CHECK(dataio::ReadFile(toy / "det1" / "model.ckpt") !=
        dataio::ReadFile(toy / "det3" / "model.ckpt"));
}

TEST_CASE("divergence exits 1 and keeps the last finite checkpoint") {
  const Toy& toy = ExtractedToy();
  const auto r = toy.Run({"--set", "train.cnn_learning_rate=1e30", "--set", "train.max_epochs=3",
                          "train", "--output-dir", (toy / "diverged").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("diverged") != std::string::npos);
  CHECK(fs::exists(toy / "diverged" / "last.ckpt"));
  CHECK_FALSE(fs::exists(toy / "diverged" / "model.ckpt"));
  const auto manifest =
      nlohmann::json::parse(dataio::ReadFile(toy / "diverged" / "manifest.json"));
  CHECK(manifest["status"] == "diverged");
}

TEST_CASE("train and score a SincNet model from audio") {
  const Toy& toy = Extracted();
  auto r = toy.Run({"train", "--model", "sincnet", "--output-dir", (toy / "sinc").string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(CountLines(toy / "sinc" / "history.csv") == 2);
  r = toy.Run({"score", "--model", (toy / "sinc" / "model.ckpt").string(), "--output",
               (toy / "sinc" / "scores.txt").string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto eval_protocol = dataio::ReadProtocol(toy / "eval.txt", Partition::kEval);
  CHECK(dataio::ReadScores(toy / "sinc" / "scores.txt").size() == eval_protocol.records.size());
  // SincNet input depends on the VAD settings only.
  r = toy.Run({"--set", "features.vad_threshold_db=30", "score", "--model",
               (toy / "sinc" / "model.ckpt").string(), "--output",
               (toy / "sinc" / "other.txt").string()});
  CHECK(r.code == 2);
}

TEST_CASE("fuse averages score files and rejects mismatched ids") {
  testing_support::TempDir dir;
  dataio::WriteScores({{"u1", 1.0}, {"u2", -2.0}}, dir / "a.txt");
  dataio::WriteScores({{"u1", 3.0}, {"u2", 0.5}}, dir / "b.txt");
  dataio::WriteScores({{"u1", 3.0}, {"u3", 0.5}}, dir / "c.txt");

  auto r = RunCli({"fuse", (dir / "a.txt").string(), (dir / "a.txt").string(), "--output",
                   (dir / "aa.txt").string()});
  REQUIRE(r.code == 0);
  CHECK(dataio::ReadScores(dir / "aa.txt") == dataio::ReadScores(dir / "a.txt"));

  r = RunCli({"fuse", (dir / "a.txt").string(), (dir / "b.txt").string(), "--output",
              (dir / "ab.txt").string()});
  REQUIRE(r.code == 0);
  const ScoreSet fused = dataio::ReadScores(dir / "ab.txt");
  CHECK(fused.at("u1") == 2.0);
  CHECK(fused.at("u2") == -0.75);

  r = RunCli({"fuse", (dir / "a.txt").string(), (dir / "c.txt").string(), "--output",
              (dir / "ac.txt").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("u3") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "ac.txt"));
}

TEST_CASE("eval reports separable scores and lists missing ids") {
  testing_support::TempDir dir;
  dataio::WriteFile(dir / "p.txt",
                    "S1 b1 - - bonafide\nS1 b2 - - bonafide\nS1 s1 - A01 spoof\n"
                    "S1 s2 - A02 spoof\nS1 s3 - A02 spoof\n");
  dataio::WriteScores({{"b1", 3.0}, {"b2", 2.0}, {"s1", -1.0}, {"s2", -2.0}, {"s3", 0.0}},
                      dir / "good.txt");
  auto r = RunCli({"eval", "--scores", (dir / "good.txt").string(), "--protocol",
                   (dir / "p.txt").string(), "--output", (dir / "rep").string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const std::string csv = dataio::ReadFile(dir / "rep.csv");
  CHECK(csv.find("pooled,2,3,0,0\n") != std::string::npos);
  CHECK(csv.find("A01,2,1,0,0\n") != std::string::npos);
  CHECK(csv.find("A02,2,2,0,0\n") != std::string::npos);
  CHECK(dataio::ReadFile(dir / "rep.txt") == r.out);
  CHECK(r.out.find("EER 0.000%") != std::string::npos);

  dataio::WriteScores({{"b1", 3.0}, {"s1", -1.0}, {"s2", -2.0}}, dir / "partial.txt");
  r = RunCli({"eval", "--scores", (dir / "partial.txt").string(), "--protocol",
              (dir / "p.txt").string(), "--output", (dir / "rep2").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("b2") != std::string::npos);
  CHECK(r.err.find("s3") != std::string::npos);

  r = RunCli({"eval", "--scores", (dir / "nope.txt").string(), "--protocol",
              (dir / "p.txt").string(), "--output", (dir / "rep3").string()});
  CHECK(r.code == 2);
}

TEST_CASE("crossval rejects holding out every attack") {
  const Toy& toy = ExtractedToy();
  const auto r = toy.Run({"crossval", "--k", "2"});
  CHECK(r.code == 2);
  CHECK(r.err.find("cannot hold out 2") != std::string::npos);
}

TEST_CASE("crossval with six attacks and k = 1 reports six splits") {
  Toy toy(2, 3, 2, 6);
  auto r = toy.Run({"extract"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  r = toy.Run({"crossval", "--k", "1"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const std::string csv = dataio::ReadFile(toy / "run" / "crossval.csv");
  CHECK(CountLines(toy / "run" / "crossval.csv") == 7);
  CHECK(csv.rfind("split,train_attacks,heldout_attacks,bonafide,spoof,eer,min_tdcf\n", 0) == 0);
  std::set<std::string> heldout;
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<std::string> cols;
    std::stringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cols.push_back(c);
    REQUIRE(cols.size() == 7);
    heldout.insert(cols[2]);
    CHECK(cols[1].find(cols[2]) == std::string::npos);
    CHECK(cols[5] != "nan");
  }
  CHECK(heldout == std::set<std::string>{"A01", "A02", "A03", "A04", "A05", "A06"});
  CHECK(fs::exists(toy / "run" / "crossval.txt"));
}
