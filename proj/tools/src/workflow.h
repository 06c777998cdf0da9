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

#pragma once

#include <filesystem>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "antispoof/dataio.h"
#include "antispoof/eval.h"
#include "antispoof/models.h"
#include "antispoof/pipeline.h"
#include "settings.h"

namespace antispoof::cli {

// ---------------------------------------------------------------------------
// Feature cache. Each utterance has one file per feature kind,
// <cache_dir>/<kind>/<utt_id>.afc, holding the single-channel log-MVN map,
// and a stamp <utt_id>.stamp with three hashes: the source audio, the
// feature configuration and the cache file itself. An entry is up to date
// when all three still match.

enum class CacheKind { kSpectrogram, kCqt };

const char* ToString(CacheKind kind);
std::vector<CacheKind> CacheKinds(FeatureKind features);

std::filesystem::path CachePath(const RunConfig& config, CacheKind kind,
                                const std::string& utt_id);

struct ExtractReport {
  std::size_t written = 0;  // cache files (re)written
  std::size_t skipped = 0;  // cache files already up to date
  // "utt_id: reason", in protocol order.
  std::vector<std::string> errors;
};

// Computes every missing or stale cache entry of the protocols' utterances
// on config.WorkerThreads() threads. Per-utterance failures are collected,
// not thrown.
ExtractReport ExtractFeatures(const RunConfig& config,
                              const std::vector<ProtocolSet>& protocols);

// Cached model input of one utterance: the configured kinds stacked as
// channels. Throws InputError naming the file and the fix when an entry is
// missing or was made with a different configuration.
FeatureMap LoadCnnFeatures(const RunConfig& config, const std::string& utt_id);

// SHA-256 over the cache stamps of the protocol's utterances, in protocol
// order: a fingerprint of the exact features a model saw.
std::string CacheFingerprint(const RunConfig& config, const ProtocolSet& protocol);

struct AudioSet {
  WaveformStore store;  // normalized and VAD-trimmed
  // SHA-256 over the per-file audio hashes, in protocol order.
  std::string fingerprint;
};

// Loads, normalizes and VAD-trims the protocol's audio for SincNet.
AudioSet LoadPreprocessedAudio(const RunConfig& config, const ProtocolSet& protocol);

// ---------------------------------------------------------------------------
// Training and scoring.

struct TrainOutcome {
  pipeline::History history;
  pipeline::SpeakerSplit split;
  std::size_t params = 0;
  bool diverged = false;
  std::string divergence;  // message when diverged
};

// Trains config.model on `protocol` and writes into `out_dir`:
//   model.ckpt    final parameters (best validation epoch for VGG/LCNN)
//   last.ckpt     parameters after the latest finished epoch
//   history.csv   per-epoch losses
//   manifest.json configuration, seed, input hashes, split and model spec
// On divergence model.ckpt is not written, last.ckpt keeps the last
// finite-loss parameters and the outcome is flagged.
TrainOutcome TrainModel(const RunConfig& config, const Settings& settings,
                        const std::vector<std::string>& command_line,
                        const ProtocolSet& protocol,
                        const std::filesystem::path& protocol_path,
                        const std::filesystem::path& out_dir, std::ostream& log);

// Model spec recorded in a training manifest.
models::ModelSpec SpecFromManifest(const std::filesystem::path& manifest_path);

// Scores every utterance of `protocol` with the checkpoint `checkpoint`,
// whose training manifest lies in the same directory. Throws
// FeatureMismatchError when the current feature configuration differs from
// the one the model was trained on.
ScoreSet ScoreWithCheckpoint(const RunConfig& config,
                             const std::filesystem::path& checkpoint,
                             const ProtocolSet& protocol);

class FeatureMismatchError : public InputError {
 public:
  using InputError::InputError;
};

eval::TdcfParams LoadTdcfParams(const RunConfig& config);

// Checks that a configured input path exists.
void RequirePath(const std::filesystem::path& path, const std::string& what);

}  // namespace antispoof::cli
