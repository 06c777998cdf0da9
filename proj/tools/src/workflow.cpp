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

#include "workflow.h"

#include <atomic>
#include <optional>
#include <sstream>
#include <set>
#include <thread>

#include "antispoof/dsp.h"
#include "antispoof/eval.h"
#include "antispoof/nnet/network.h"
#include "manifest.h"

namespace antispoof::cli {
namespace {

struct Stamp {
  std::string audio;
  std::string config;
  std::string cache;
};

std::filesystem::path StampPath(const RunConfig& config, CacheKind kind,
                                const std::string& utt_id) {
  return config.cache_dir / ToString(kind) / (utt_id + ".stamp");
}

std::string ConfigHash(const RunConfig& config, CacheKind kind) {
  return kind == CacheKind::kSpectrogram ? config.SpectrogramHash() : config.CqtHash();
}

std::optional<Stamp> ReadStamp(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) return std::nullopt;
  std::istringstream in(dataio::ReadFile(path));
  Stamp s;
  std::string tag;
  if (!(in >> tag >> s.audio) || tag != "audio") return std::nullopt;
  if (!(in >> tag >> s.config) || tag != "config") return std::nullopt;
  if (!(in >> tag >> s.cache) || tag != "cache") return std::nullopt;
  return s;
}

std::string FormatStamp(const Stamp& s) {
  return "audio " + s.audio + "\nconfig " + s.config + "\ncache " + s.cache + "\n";
}

bool UpToDate(const RunConfig& config, CacheKind kind, const std::string& utt_id,
              const std::string& audio_sha) {
  const auto stamp = ReadStamp(StampPath(config, kind, utt_id));
  if (!stamp || stamp->audio != audio_sha || stamp->config != ConfigHash(config, kind))
    return false;
  const auto cache = CachePath(config, kind, utt_id);
  return std::filesystem::exists(cache) && FileSha256(cache) == stamp->cache;
}

// Unique utterance ids of several protocols in first-appearance order.
std::vector<std::string> UtteranceIds(const std::vector<ProtocolSet>& protocols) {
  std::vector<std::string> ids;
  std::set<std::string> seen;
  for (const auto& p : protocols)
    for (const auto& r : p.records)
      if (seen.insert(r.utt_id).second) ids.push_back(r.utt_id);
  return ids;
}

nlohmann::json SpecToJson(const models::ModelSpec& spec) {
  return {{"kind", models::ToString(spec.kind)},
          {"input_channels", spec.input_channels},
          {"width_multiplier", spec.width_multiplier},
          {"dropout", models::ToString(spec.dropout_profile)},
          {"input_bins", spec.input_bins},
          {"chunk_samples", spec.chunk_samples},
          {"sample_rate", spec.sample_rate}};
}

// Second stream for dropout masks, so that the parameter initialization and
// batch order do not depend on how many masks a model draws.
constexpr std::uint64_t kDropoutStream = 0x9e3779b97f4a7c15ULL;

}  // namespace

const char* ToString(CacheKind kind) {
  return kind == CacheKind::kSpectrogram ? "spec" : "cqt";
}

std::vector<CacheKind> CacheKinds(FeatureKind features) {
  switch (features) {
    case FeatureKind::kSpectrogram: return {CacheKind::kSpectrogram};
    case FeatureKind::kCqt: return {CacheKind::kCqt};
    case FeatureKind::kBoth: return {CacheKind::kSpectrogram, CacheKind::kCqt};
  }
  return {};
}

std::filesystem::path CachePath(const RunConfig& config, CacheKind kind,
                                const std::string& utt_id) {
  return config.cache_dir / ToString(kind) / (utt_id + ".afc");
}

ExtractReport ExtractFeatures(const RunConfig& config,
                              const std::vector<ProtocolSet>& protocols) {
  const std::vector<std::string> ids = UtteranceIds(protocols);
  const std::vector<CacheKind> kinds = CacheKinds(config.features);
  const int sample_rate = config.model.sample_rate;
  std::optional<dsp::CqtKernelBank> bank;
  if (config.features != FeatureKind::kSpectrogram) bank.emplace(config.cqt, sample_rate);

  std::vector<std::string> errors(ids.size());
  std::atomic<std::size_t> next{0}, written{0}, skipped{0};
  auto work = [&] {
    for (std::size_t i = next++; i < ids.size(); i = next++) {
      const std::string& utt = ids[i];
      try {
        const auto audio_path = dataio::AudioPath(config.audio_root, utt);
        if (!std::filesystem::exists(audio_path))
          throw InputError("missing audio file " + audio_path.string());
        const std::string bytes = dataio::ReadFile(audio_path);
        const std::string audio_sha = Sha256Hex(bytes);
        std::vector<CacheKind> todo;
        for (CacheKind kind : kinds)
          if (!UpToDate(config, kind, utt, audio_sha)) todo.push_back(kind);
        skipped += kinds.size() - todo.size();
        if (todo.empty()) continue;
        const Waveform wave = dataio::DecodeWav(bytes);
        if (wave.sample_rate != sample_rate)
          throw InputError("sample rate " + std::to_string(wave.sample_rate) +
                           " Hz, expected " + std::to_string(sample_rate) + " Hz");
        for (CacheKind kind : todo) {
          const FeatureMap raw = kind == CacheKind::kSpectrogram
                                     ? dsp::PowerSpectrogram(wave, config.spectrogram)
                                     : bank->Transform(wave);
          const std::string encoded =
              dataio::EncodeFeatureCache(dsp::LogMvn(raw, config.log_floor));
          dataio::WriteFile(CachePath(config, kind, utt), encoded);
          dataio::WriteFile(StampPath(config, kind, utt),
                            FormatStamp({audio_sha, ConfigHash(config, kind),
                                         Sha256Hex(encoded)}));
          ++written;
        }
      } catch (const std::exception& e) {
        errors[i] = utt + ": " + e.what();
      }
    }
  };
  const std::size_t threads = std::min(config.WorkerThreads(), std::max<std::size_t>(1, ids.size()));
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work);
  }

  ExtractReport report;
  report.written = written;
  report.skipped = skipped;
  for (auto& e : errors)
    if (!e.empty()) report.errors.push_back(std::move(e));
  return report;
}

FeatureMap LoadCnnFeatures(const RunConfig& config, const std::string& utt_id) {
  std::vector<FeatureMap> maps;
  for (CacheKind kind : CacheKinds(config.features)) {
    const auto cache = CachePath(config, kind, utt_id);
    const auto stamp = ReadStamp(StampPath(config, kind, utt_id));
    if (!stamp || !std::filesystem::exists(cache))
      throw InputError("no cached " + std::string(ToString(kind)) + " features for " +
                       utt_id + " (expected " + cache.string() +
                       "); run `antispoof extract` with the same [paths] and "
                       "[features] settings first");
    if (stamp->config != ConfigHash(config, kind))
      throw InputError("cached " + std::string(ToString(kind)) + " features for " +
                       utt_id + " were computed with different [features] "
                       "settings; rerun `antispoof extract`");
    const std::string bytes = dataio::ReadFile(cache);
    if (Sha256Hex(bytes) != stamp->cache)
      throw InputError(cache.string() + " does not match its stamp; rerun `antispoof extract`");
    maps.push_back(dataio::DecodeFeatureCache(bytes));
  }
  if (maps.size() == 1) return std::move(maps.front());
  return dsp::StackChannels(maps[0], maps[1]);
}

std::string CacheFingerprint(const RunConfig& config, const ProtocolSet& protocol) {
  std::string all;
  for (const auto& r : protocol.records)
    for (CacheKind kind : CacheKinds(config.features)) {
      const auto path = StampPath(config, kind, r.utt_id);
      all += r.utt_id + " " + ToString(kind) + "\n";
      if (std::filesystem::exists(path)) all += dataio::ReadFile(path);
    }
  return Sha256Hex(all);
}

AudioSet LoadPreprocessedAudio(const RunConfig& config, const ProtocolSet& protocol) {
  AudioSet set;
  std::string hashes;
  std::vector<std::string> missing;
  for (const auto& r : protocol.records) {
    if (set.store.count(r.utt_id)) continue;
    const auto path = dataio::AudioPath(config.audio_root, r.utt_id);
    if (!std::filesystem::exists(path)) {
      missing.push_back(path.string());
      continue;
    }
    const std::string bytes = dataio::ReadFile(path);
    hashes += r.utt_id + " " + Sha256Hex(bytes) + "\n";
    try {
      set.store.emplace(r.utt_id, dsp::PreprocessWaveform(dataio::DecodeWav(bytes), config.vad));
    } catch (const InputError& e) {
      throw InputError(path.string() + ": " + e.what());
    }
  }
  if (!missing.empty()) {
    std::string msg = std::to_string(missing.size()) + " audio file(s) missing:";
    for (std::size_t i = 0; i < missing.size() && i < 10; ++i) msg += "\n  " + missing[i];
    if (missing.size() > 10) msg += "\n  ...";
    throw InputError(msg);
  }
  set.fingerprint = Sha256Hex(hashes);
  return set;
}

TrainOutcome TrainModel(const RunConfig& config, const Settings& settings,
                        const std::vector<std::string>& command_line,
                        const ProtocolSet& protocol,
                        const std::filesystem::path& protocol_path,
                        const std::filesystem::path& out_dir, std::ostream& log) {
  const models::ModelSpec& spec = config.model;
  const bool sinc = spec.kind == models::ModelKind::kSincNet;
  Rng rng(config.seed);
  Rng dropout_rng(config.seed ^ kDropoutStream);

  TrainOutcome outcome;
  outcome.split = pipeline::SplitTrainValid(protocol, rng);
  if (!outcome.split.warning.empty()) log << "warning: " << outcome.split.warning << "\n";
  const ProtocolSet train_set = pipeline::FilterSpeakers(protocol, outcome.split.train);
  const ProtocolSet valid_set = pipeline::FilterSpeakers(protocol, outcome.split.valid);

  Manifest manifest("train", settings, command_line);
  if (!protocol_path.empty()) manifest.AddInputFile("train_protocol", protocol_path);
  manifest["model"] = SpecToJson(spec);
  manifest["feature_hash"] = config.FeatureHash(spec.kind);
  manifest["split"] = {{"train", outcome.split.train}, {"valid", outcome.split.valid}};

  // Load everything before the first output is written, so that input
  // errors leave no partial run behind.
  AudioSet audio;
  std::vector<pipeline::Example> train_examples, valid_examples;
  if (sinc) {
    audio = LoadPreprocessedAudio(config, protocol);
    manifest.AddInputHash("audio", audio.fingerprint);
  } else {
    const auto load = [&](const TrialRecord& r) { return LoadCnnFeatures(config, r.utt_id); };
    train_examples = pipeline::MakeExamples(pipeline::GroupFeatures(train_set, load));
    if (!valid_set.records.empty())
      valid_examples = pipeline::MakeExamples(pipeline::GroupFeatures(valid_set, load));
    manifest.AddInputHash("features", CacheFingerprint(config, protocol));
  }

  auto model = models::BuildModel<float>(spec, rng, &dropout_rng);
  outcome.params = model.CountParams();
  manifest["params"] = outcome.params;
  std::filesystem::create_directories(out_dir);
  const auto last_path = out_dir / "last.ckpt";
  const auto model_path = out_dir / "model.ckpt";
  const auto history_path = out_dir / "history.csv";
  std::filesystem::remove(model_path);
  nnet::SaveCheckpoint(model.net(), last_path);

  pipeline::History finished;
  const auto on_epoch = [&](const pipeline::EpochRecord& r) {
    finished.epochs.push_back(r);
    nnet::SaveCheckpoint(model.net(), last_path);
    log << "epoch " << r.epoch << "  train_loss " << FormatNumber(r.train_loss)
        << "  valid_loss " << FormatNumber(r.valid_loss) << "  lr "
        << FormatNumber(r.learning_rate) << "\n"
        << std::flush;
  };
  log << "training " << models::ToString(spec.kind) << " (" << outcome.params
      << " parameters) on " << train_set.records.size() << " utterances\n";
  try {
    if (sinc) {
      const pipeline::ChunkConfig chunks{spec.chunk_samples, config.chunk_pairs, 100};
      const pipeline::ChunkSampler train_sampler(train_set, audio.store, chunks);
      std::optional<pipeline::ChunkSampler> valid_sampler;
      if (!valid_set.records.empty()) valid_sampler.emplace(valid_set, audio.store, chunks);
      outcome.history = pipeline::TrainSincNet(
          model, train_sampler, valid_sampler ? &*valid_sampler : nullptr,
          config.sincnet, rng, on_epoch);
    } else {
      outcome.history = pipeline::TrainCnn(model, train_examples, valid_examples,
                                           config.cnn, rng, on_epoch);
    }
    nnet::SaveCheckpoint(model.net(), model_path);
  } catch (const pipeline::DivergenceError& e) {
    outcome.diverged = true;
    outcome.divergence = e.what();
    outcome.history = finished;
  }

  dataio::WriteFile(history_path, outcome.history.ToCsv());
  manifest["status"] = outcome.diverged ? "diverged" : "ok";
  if (outcome.diverged) manifest["error"] = outcome.divergence;
  manifest["history"] = {{"epochs", outcome.history.epochs.size()},
                         {"best_epoch", outcome.history.best_epoch}};
  if (!outcome.diverged) manifest.AddOutputFile("model", model_path);
  manifest.AddOutputFile("last", last_path);
  manifest.AddOutputFile("history", history_path);
  manifest.Write(out_dir / "manifest.json");
  return outcome;
}

models::ModelSpec SpecFromManifest(const std::filesystem::path& manifest_path) {
  const nlohmann::json doc = Manifest::Read(manifest_path);
  try {
    const auto& m = doc.at("model");
    models::ModelSpec spec;
    spec.kind = models::ParseModelKind(m.at("kind").get<std::string>());
    spec.input_channels = m.at("input_channels").get<std::size_t>();
    spec.width_multiplier = m.at("width_multiplier").get<double>();
    spec.dropout_profile = models::ParseDropoutProfile(m.at("dropout").get<std::string>());
    spec.input_bins = m.at("input_bins").get<std::size_t>();
    spec.chunk_samples = m.at("chunk_samples").get<std::size_t>();
    spec.sample_rate = m.at("sample_rate").get<int>();
    spec.Validate();
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(manifest_path.string() + ": malformed model entry: " + e.what());
  }
}

ScoreSet ScoreWithCheckpoint(const RunConfig& config,
                             const std::filesystem::path& checkpoint,
                             const ProtocolSet& protocol) {
  RequirePath(checkpoint, "checkpoint");
  const auto manifest_path = checkpoint.parent_path() / "manifest.json";
  const models::ModelSpec spec = SpecFromManifest(manifest_path);
  const std::string trained = Manifest::Read(manifest_path).value("feature_hash", "");
  const std::string current = config.FeatureHash(spec.kind);
  if (trained != current)
    throw FeatureMismatchError(
        "feature configuration mismatch: " + checkpoint.string() +
        " was trained on features with hash " + trained.substr(0, 12) +
        " but the current [features] settings hash to " + current.substr(0, 12) +
        "; score with the [features] section recorded in " + manifest_path.string());

  Rng rng(0);
  auto model = models::BuildModel<float>(spec, rng, nullptr);
  nnet::LoadCheckpoint(model.net(), checkpoint);

  ScoreSet scores;
  if (spec.kind == models::ModelKind::kSincNet) {
    const AudioSet audio = LoadPreprocessedAudio(config, protocol);
    for (const auto& r : protocol.records)
      scores[r.utt_id] =
          eval::ScoreUtteranceSincNet(model, audio.store.at(r.utt_id), config.scoring);
  } else {
    for (const auto& r : protocol.records)
      scores[r.utt_id] = eval::ScoreUtteranceCnn(model, LoadCnnFeatures(config, r.utt_id));
  }
  return scores;
}

eval::TdcfParams LoadTdcfParams(const RunConfig& config) {
  if (config.tdcf_params.empty()) return {};
  RequirePath(config.tdcf_params, "t-DCF parameter file (paths.tdcf_params)");
  return eval::ReadTdcfParams(config.tdcf_params);
}

void RequirePath(const std::filesystem::path& path, const std::string& what) {
  if (path.empty()) throw ConfigError(what + " is not set");
  if (!std::filesystem::exists(path))
    throw InputError(what + " not found: " + path.string());
}

}  // namespace antispoof::cli
