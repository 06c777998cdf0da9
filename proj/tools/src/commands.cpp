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

#include "commands.h"

#include <algorithm>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "antispoof/common.h"
#include "antispoof/dataio.h"
#include "antispoof/eval.h"
#include "antispoof/pipeline.h"
#include "antispoof/synth.h"
#include "manifest.h"
#include "settings.h"
#include "workflow.h"

namespace antispoof::cli {
namespace {

namespace fs = std::filesystem;

// Everything a subcommand needs once the command line is parsed.
struct Context {
  Settings settings;
  RunConfig config;
  std::vector<std::string> command_line;
  std::ostream& out;
  std::ostream& err;
};

// Flags shared by all subcommands. Precedence, lowest first: built-in
// defaults, --config file, --set assignments, dedicated flags.
struct GlobalOptions {
  std::string config_file;
  std::vector<std::string> assignments;
  std::optional<std::uint64_t> seed;
  bool deterministic = false;
};

// A dedicated flag bound to one config key; applied only when given.
struct KeyFlag {
  std::string key;
  std::string value;
  CLI::Option* option = nullptr;
};

class FlagTable {
 public:
  void Add(CLI::App* app, const std::string& flag, const std::string& key,
           const std::string& help) {
    auto& f = flags_.emplace_back(std::make_unique<KeyFlag>());
    f->key = key;
    f->option = app->add_option(flag, f->value, help + " (" + key + ")");
  }
  void Apply(Settings& settings) const {
    for (const auto& f : flags_)
      if (f->option->count() > 0) settings.Set(f->key, f->value);
  }

 private:
  std::vector<std::unique_ptr<KeyFlag>> flags_;
};

ProtocolSet LoadProtocol(const fs::path& path, Partition partition, const std::string& what) {
  RequirePath(path, what);
  return dataio::ReadProtocol(path, partition);
}

// ---------------------------------------------------------------------------

int CmdExtract(Context& ctx, const std::vector<std::string>& protocol_flags) {
  const RunConfig& c = ctx.config;
  RequirePath(c.audio_root, "audio root (paths.audio_root)");
  std::vector<fs::path> paths(protocol_flags.begin(), protocol_flags.end());
  if (paths.empty()) paths = {c.train_protocol, c.eval_protocol};
  std::vector<ProtocolSet> protocols;
  for (const auto& p : paths) protocols.push_back(LoadProtocol(p, Partition::kTrain, "protocol"));

  const ExtractReport report = ExtractFeatures(c, protocols);
  ctx.out << "extract: " << report.written << " cache file(s) written, " << report.skipped
          << " up to date, " << report.errors.size() << " utterance(s) failed\n";

  Manifest manifest("extract", ctx.settings, ctx.command_line);
  for (std::size_t i = 0; i < paths.size(); ++i)
    manifest.AddInputFile("protocol_" + std::to_string(i), paths[i]);
  manifest["feature_hashes"] = {{"spec", c.SpectrogramHash()}, {"cqt", c.CqtHash()}};
  manifest["written"] = report.written;
  manifest["skipped"] = report.skipped;
  manifest["errors"] = report.errors;
  manifest.Write(c.cache_dir / "extract.manifest.json");

  if (report.errors.empty()) return kExitOk;
  ctx.err << "error: " << report.errors.size() << " utterance(s) could not be extracted:\n";
  for (const auto& e : report.errors) ctx.err << "  " << e << "\n";
  return kExitInputError;
}

int CmdTrain(Context& ctx, const std::string& protocol_flag) {
  const RunConfig& c = ctx.config;
  const fs::path protocol_path = protocol_flag.empty() ? c.train_protocol : fs::path(protocol_flag);
  const ProtocolSet protocol = LoadProtocol(protocol_path, Partition::kTrain, "training protocol");
  // A missing cache is reported per utterance with the command that fixes it.
  if (c.model.kind == models::ModelKind::kSincNet)
    RequirePath(c.audio_root, "audio root (paths.audio_root)");

  const TrainOutcome outcome = TrainModel(c, ctx.settings, ctx.command_line, protocol,
                                          protocol_path, c.output_dir, ctx.out);
  if (outcome.diverged) {
    ctx.err << "error: " << outcome.divergence << "; the last finite-loss checkpoint is "
            << (c.output_dir / "last.ckpt").string() << "\n";
    return kExitFailure;
  }
  ctx.out << "wrote " << (c.output_dir / "model.ckpt").string() << " (best epoch "
          << outcome.history.best_epoch << " of " << outcome.history.epochs.size() << ")\n";
  return kExitOk;
}

int CmdScore(Context& ctx, std::string checkpoint, std::string protocol_flag, std::string output) {
  const RunConfig& c = ctx.config;
  if (checkpoint.empty()) checkpoint = (c.output_dir / "model.ckpt").string();
  const fs::path protocol_path = protocol_flag.empty() ? c.eval_protocol : fs::path(protocol_flag);
  if (output.empty()) output = (c.output_dir / "scores.txt").string();
  const ProtocolSet protocol = LoadProtocol(protocol_path, Partition::kEval, "protocol");

  const ScoreSet scores = ScoreWithCheckpoint(c, checkpoint, protocol);
  dataio::WriteScores(scores, output);

  Manifest manifest("score", ctx.settings, ctx.command_line);
  manifest.AddInputFile("checkpoint", checkpoint);
  manifest.AddInputFile("protocol", protocol_path);
  manifest.AddOutputFile("scores", output);
  manifest.Write(output + ".manifest.json");
  ctx.out << "wrote " << scores.size() << " scores to " << output << "\n";
  return kExitOk;
}

int CmdFuse(Context& ctx, const std::vector<std::string>& inputs, const std::string& output) {
  std::vector<ScoreSet> sets;
  for (const auto& in : inputs) {
    RequirePath(in, "score file");
    sets.push_back(dataio::ReadScores(in));
  }
  dataio::WriteScores(eval::Fuse(sets), output);

  Manifest manifest("fuse", ctx.settings, ctx.command_line);
  for (std::size_t i = 0; i < inputs.size(); ++i)
    manifest.AddInputFile("scores_" + std::to_string(i), inputs[i]);
  manifest.AddOutputFile("fused", output);
  manifest.Write(output + ".manifest.json");
  ctx.out << "fused " << inputs.size() << " score files into " << output << "\n";
  return kExitOk;
}

int CmdEval(Context& ctx, const std::string& scores_path, std::string protocol_flag,
            const std::string& prefix) {
  const RunConfig& c = ctx.config;
  const fs::path protocol_path = protocol_flag.empty() ? c.eval_protocol : fs::path(protocol_flag);
  const ProtocolSet protocol = LoadProtocol(protocol_path, Partition::kEval, "protocol");
  RequirePath(scores_path, "score file");
  const ScoreSet scores = dataio::ReadScores(scores_path);
  const eval::TdcfParams params = LoadTdcfParams(c);

  const eval::Report report =
      eval::Evaluate(eval::JoinScores(scores, protocol), c.group_by, params);
  const std::string text = report.ToText();
  dataio::WriteFile(prefix + ".csv", report.ToCsv());
  dataio::WriteFile(prefix + ".txt", text);

  Manifest manifest("eval", ctx.settings, ctx.command_line);
  manifest.AddInputFile("scores", scores_path);
  manifest.AddInputFile("protocol", protocol_path);
  if (!c.tdcf_params.empty()) manifest.AddInputFile("tdcf_params", c.tdcf_params);
  manifest["tdcf_params"] = eval::FormatTdcfParams(params);
  manifest.AddOutputFile("csv", prefix + ".csv");
  manifest.AddOutputFile("text", prefix + ".txt");
  manifest.Write(prefix + ".manifest.json");
  ctx.out << text;
  return kExitOk;
}

std::string Join(const std::vector<std::string>& items, const std::string& sep) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : sep) + s;
  return out;
}

int CmdCrossval(Context& ctx) {
  const RunConfig& c = ctx.config;
  const ProtocolSet train = LoadProtocol(c.train_protocol, Partition::kTrain, "training protocol");
  const ProtocolSet test = LoadProtocol(c.eval_protocol, Partition::kEval, "evaluation protocol");
  // Validates k against the attack count before any training starts.
  const auto splits = pipeline::AttackCrossvalSplits(train, c.k_hold);
  const eval::TdcfParams params = LoadTdcfParams(c);

  struct Row {
    std::string name, train_attacks, heldout;
    std::size_t bonafide = 0, spoof = 0;
    std::optional<double> eer, min_tdcf;
  };
  std::vector<Row> rows;
  bool any_diverged = false;
  for (std::size_t i = 0; i < splits.size(); ++i) {
    const auto& split = splits[i];
    Row row;
    row.name = "split" + std::to_string(i + 1);
    row.train_attacks = Join(split.train_attacks, "+");
    row.heldout = Join(split.heldout_attacks, "+");
    ctx.out << "== " << row.name << ": train on " << row.train_attacks << ", hold out "
            << row.heldout << "\n";
    const fs::path dir = c.output_dir / "crossval" / row.name;
    const std::set<std::string> train_set(split.train_attacks.begin(), split.train_attacks.end());
    const std::set<std::string> held_set(split.heldout_attacks.begin(), split.heldout_attacks.end());
    const TrainOutcome outcome =
        TrainModel(c, ctx.settings, ctx.command_line, pipeline::FilterAttacks(train, train_set),
                   c.train_protocol, dir, ctx.out);
    if (outcome.diverged) {
      ctx.err << "error: " << row.name << ": " << outcome.divergence << "\n";
      any_diverged = true;
    } else {
      const ProtocolSet heldout = pipeline::FilterAttacks(test, held_set);
      const ScoreSet scores = ScoreWithCheckpoint(c, dir / "model.ckpt", heldout);
      dataio::WriteScores(scores, dir / "heldout_scores.txt");
      const auto trials = eval::JoinScores(scores, heldout);
      for (const auto& t : trials) (t.key == Key::kBonafide ? row.bonafide : row.spoof)++;
      row.eer = eval::ComputeEer(trials).eer;
      row.min_tdcf = eval::ComputeMinTdcf(trials, params).min_tdcf;
      ctx.out << row.name << ": held-out EER " << FormatNumber(100.0 * *row.eer) << "%\n";
    }
    rows.push_back(row);
  }

  std::string csv = "split,train_attacks,heldout_attacks,bonafide,spoof,eer,min_tdcf\n";
  std::ostringstream text;
  text << std::left << std::setw(8) << "split" << std::setw(20) << "train" << std::setw(10)
       << "heldout" << std::right << std::setw(9) << "EER[%]" << std::setw(10) << "min-tDCF"
       << "\n"
       << std::fixed;
  for (const auto& r : rows) {
    const auto num = [](const std::optional<double>& v) {
      return v ? FormatNumber(*v) : std::string("nan");
    };
    csv += r.name + "," + r.train_attacks + "," + r.heldout + "," + std::to_string(r.bonafide) +
           "," + std::to_string(r.spoof) + "," + num(r.eer) + "," + num(r.min_tdcf) + "\n";
    text << std::left << std::setw(8) << r.name << std::setw(20) << r.train_attacks
         << std::setw(10) << r.heldout << std::right;
    if (r.eer)
      text << std::setw(9) << std::setprecision(3) << 100.0 * *r.eer << std::setw(10)
           << std::setprecision(4) << *r.min_tdcf << "\n";
    else
      text << std::setw(9) << "diverged" << std::setw(10) << "-" << "\n";
  }
  const fs::path csv_path = c.output_dir / "crossval.csv";
  const fs::path txt_path = c.output_dir / "crossval.txt";
  dataio::WriteFile(csv_path, csv);
  dataio::WriteFile(txt_path, text.str());

  Manifest manifest("crossval", ctx.settings, ctx.command_line);
  manifest.AddInputFile("train_protocol", c.train_protocol);
  manifest.AddInputFile("eval_protocol", c.eval_protocol);
  manifest.AddOutputFile("csv", csv_path);
  manifest.AddOutputFile("text", txt_path);
  manifest.Write(c.output_dir / "crossval.manifest.json");
  ctx.out << text.str();
  return any_diverged ? kExitFailure : kExitOk;
}

struct SynthOptions {
  std::string output;
  synth::CorpusConfig train;
  std::size_t eval_speakers = 2;
};

int CmdSynth(Context& ctx, const SynthOptions& opt) {
  const fs::path root = fs::absolute(opt.output);
  Rng rng(ctx.config.seed);
  synth::CorpusConfig eval_cfg = opt.train;
  eval_cfg.speakers = opt.eval_speakers;
  eval_cfg.speaker_prefix = "EVSPK";
  eval_cfg.utt_prefix = "EVUTT";
  const synth::Corpus train = synth::MakeCorpus(opt.train, Partition::kTrain, rng);
  const synth::Corpus test = synth::MakeCorpus(eval_cfg, Partition::kEval, rng);
  synth::WriteCorpus(train, root / "audio", root / "train.txt");
  synth::WriteCorpus(test, root / "audio", root / "eval.txt");

  Settings settings = ctx.settings;
  settings.Set("paths.audio_root", (root / "audio").string());
  settings.Set("paths.train_protocol", (root / "train.txt").string());
  settings.Set("paths.eval_protocol", (root / "eval.txt").string());
  settings.Set("paths.cache_dir", (root / "cache").string());
  settings.Set("paths.output_dir", (root / "run").string());
  dataio::WriteFile(root / "config.ini", settings.ToIni());

  Manifest manifest("synth", ctx.settings, ctx.command_line);
  manifest.AddOutputFile("train_protocol", root / "train.txt");
  manifest.AddOutputFile("eval_protocol", root / "eval.txt");
  manifest.Write(root / "synth.manifest.json");
  ctx.out << "wrote " << train.protocol.records.size() << " training and "
          << test.protocol.records.size() << " evaluation utterances; config "
          << (root / "config.ini").string() << "\n";
  return kExitOk;
}

}  // namespace

int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spoofing countermeasure toolkit: features, models and evaluation", "antispoof"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions global;
  app.add_option("--config", global.config_file, "INI config file ([section] key = value)");
  app.add_option("--set", global.assignments, "override one key: section.key=value")
      ->allow_extra_args(false);
  app.add_option("--seed", global.seed, "random seed (run.seed)");
  app.add_flag("--deterministic", global.deterministic,
               "single-threaded, bitwise reproducible run (run.deterministic)");

  FlagTable flags;

  auto* defaults = app.add_subcommand("defaults", "print the documented default config");
  auto* show = app.add_subcommand("show-config", "print the effective config");

  auto* extract = app.add_subcommand("extract", "compute the feature cache");
  std::vector<std::string> extract_protocols;
  extract->add_option("--protocol", extract_protocols,
                      "protocol file(s); default: the train and eval protocols")
      ->allow_extra_args(false);
  flags.Add(extract, "--audio-root", "paths.audio_root", "audio directory");
  flags.Add(extract, "--cache-dir", "paths.cache_dir", "cache directory");
  flags.Add(extract, "--threads", "run.threads", "worker threads");

  auto* train = app.add_subcommand("train", "train a model");
  std::string train_protocol;
  train->add_option("--protocol", train_protocol, "training protocol (paths.train_protocol)");
  flags.Add(train, "--model", "model.kind", "vgg, lcnn or sincnet");
  flags.Add(train, "--width", "model.width_multiplier", "width multiplier");
  flags.Add(train, "--output-dir", "paths.output_dir", "output directory");
  flags.Add(train, "--cache-dir", "paths.cache_dir", "cache directory");
  flags.Add(train, "--audio-root", "paths.audio_root", "audio directory");
  flags.Add(train, "--epochs", "train.max_epochs", "VGG/LCNN epoch limit");

  auto* score = app.add_subcommand("score", "score a protocol with a trained model");
  std::string score_model, score_protocol, score_output;
  score->add_option("--model", score_model, "checkpoint; default <output_dir>/model.ckpt");
  score->add_option("--protocol", score_protocol, "protocol (paths.eval_protocol)");
  score->add_option("--output", score_output, "score file; default <output_dir>/scores.txt");
  flags.Add(score, "--cache-dir", "paths.cache_dir", "cache directory");
  flags.Add(score, "--audio-root", "paths.audio_root", "audio directory");

  auto* fuse = app.add_subcommand("fuse", "average score files with equal weights");
  std::vector<std::string> fuse_inputs;
  std::string fuse_output;
  fuse->add_option("scores", fuse_inputs, "score files")->required();
  fuse->add_option("--output", fuse_output, "fused score file")->required();

  auto* evaluate = app.add_subcommand("eval", "EER and min-tDCF report");
  std::string eval_scores, eval_protocol, eval_output;
  evaluate->add_option("--scores", eval_scores, "score file")->required();
  evaluate->add_option("--protocol", eval_protocol, "protocol (paths.eval_protocol)");
  evaluate->add_option("--output", eval_output, "report prefix for .csv and .txt")->required();
  flags.Add(evaluate, "--tdcf", "paths.tdcf_params", "t-DCF parameter file");
  flags.Add(evaluate, "--group-by", "eval.group_by", "attack_id or env_attack_pair");

  auto* crossval = app.add_subcommand("crossval", "leave-k-attacks-out cross-validation");
  flags.Add(crossval, "--k", "crossval.k_hold", "attacks held out per split");
  flags.Add(crossval, "--model", "model.kind", "vgg, lcnn or sincnet");
  flags.Add(crossval, "--output-dir", "paths.output_dir", "output directory");

  auto* synthesize = app.add_subcommand("synth", "write a synthetic toy corpus");
  SynthOptions synth_opt;
  synthesize->add_option("--output", synth_opt.output, "corpus directory")->required();
  synthesize->add_option("--speakers", synth_opt.train.speakers, "training speakers");
  synthesize->add_option("--eval-speakers", synth_opt.eval_speakers, "evaluation speakers");
  synthesize->add_option("--bonafide", synth_opt.train.bonafide_per_speaker,
                         "bonafide utterances per speaker");
  synthesize->add_option("--spoof", synth_opt.train.spoof_per_speaker_per_attack,
                         "spoof utterances per speaker and attack");
  synthesize->add_option("--attacks", synth_opt.train.attacks, "attack types");
  synthesize->add_option("--duration", synth_opt.train.duration_s, "seconds per utterance");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInputError;
  }

  try {
    Context ctx{Settings{}, RunConfig{}, args, out, err};
    if (!global.config_file.empty()) ctx.settings.LoadFile(global.config_file);
    for (const auto& a : global.assignments) ctx.settings.SetAssignment(a);
    flags.Apply(ctx.settings);
    if (global.seed) ctx.settings.Set("run.seed", std::to_string(*global.seed));
    if (global.deterministic) ctx.settings.Set("run.deterministic", "true");
    ctx.config = RunConfig::From(ctx.settings);

    if (*defaults) {
      out << Settings::DocumentedDefaults();
      return kExitOk;
    }
    if (*show) {
      out << ctx.settings.ToIni();
      return kExitOk;
    }
    if (*extract) return CmdExtract(ctx, extract_protocols);
    if (*train) return CmdTrain(ctx, train_protocol);
    if (*score) return CmdScore(ctx, score_model, score_protocol, score_output);
    if (*fuse) return CmdFuse(ctx, fuse_inputs, fuse_output);
    if (*evaluate) return CmdEval(ctx, eval_scores, eval_protocol, eval_output);
    if (*crossval) return CmdCrossval(ctx);
    if (*synthesize) return CmdSynth(ctx, synth_opt);
    err << "error: no subcommand\n";
    return kExitInputError;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace antispoof::cli
