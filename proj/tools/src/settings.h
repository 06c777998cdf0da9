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

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "antispoof/dsp.h"
#include "antispoof/eval.h"
#include "antispoof/models.h"
#include "antispoof/pipeline.h"

namespace antispoof::cli {

// Flat "section.key" -> value store behind the run configuration. Every key
// has a documented default; files and command-line overrides may only set
// known keys.
class Settings {
 public:
  Settings();

  // INI-style file: [section] headers, key = value lines, ';' or '#'
  // comments. Throws ConfigError on unknown sections or keys.
  void LoadFile(const std::filesystem::path& path);
  // "section.key=value".
  void SetAssignment(const std::string& assignment);
  void Set(const std::string& key, const std::string& value);

  const std::string& Get(const std::string& key) const;
  double GetDouble(const std::string& key) const;
  std::size_t GetSize(const std::string& key) const;
  std::uint64_t GetU64(const std::string& key) const;
  bool GetBool(const std::string& key) const;
  std::vector<double> GetDoubleList(const std::string& key) const;

  const std::map<std::string, std::string>& values() const { return values_; }
  // Canonical INI text of every key, grouped by section.
  std::string ToIni() const;
  // Annotated default configuration, suitable as a starting point.
  static std::string DocumentedDefaults();

 private:
  std::map<std::string, std::string> values_;
};

enum class FeatureKind { kSpectrogram, kCqt, kBoth };

const char* ToString(FeatureKind kind);
FeatureKind ParseFeatureKind(const std::string& text);

// Typed view of Settings used by the commands.
struct RunConfig {
  std::uint64_t seed = 1;
  bool deterministic = false;
  std::size_t threads = 0;

  std::filesystem::path audio_root;
  std::filesystem::path train_protocol;
  std::filesystem::path eval_protocol;
  std::filesystem::path cache_dir;
  std::filesystem::path output_dir;
  std::filesystem::path tdcf_params;  // empty: default parameters

  dsp::SpectrogramConfig spectrogram;
  dsp::CqtConfig cqt;
  double log_floor = dsp::kLogFloor;
  dsp::VadConfig vad;
  FeatureKind features = FeatureKind::kBoth;

  models::ModelSpec model;
  pipeline::CnnTrainConfig cnn;
  pipeline::SincNetTrainConfig sincnet;
  std::size_t chunk_pairs = 128;

  eval::GroupBy group_by = eval::GroupBy::kAttackId;
  eval::SincScoringConfig scoring;
  std::size_t k_hold = 1;

  static RunConfig From(const Settings& settings);

  // Worker threads for per-utterance work: 1 when deterministic.
  std::size_t WorkerThreads() const;

  // Hash of everything that determines one cached feature kind.
  std::string SpectrogramHash() const;
  std::string CqtHash() const;
  // Hash of the model input pipeline: cached features for VGG/LCNN, the
  // waveform preprocessing for SincNet. Stored with a trained model and
  // checked before scoring.
  std::string FeatureHash(models::ModelKind kind) const;

  // Model spec with the input geometry implied by the feature settings.
  models::ModelSpec ModelFor(models::ModelKind kind) const;
};

}  // namespace antispoof::cli
