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
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "antispoof/common.h"
#include "antispoof/dsp.h"

namespace antispoof {

enum class Key { kBonafide, kSpoof };
enum class Partition { kTrain, kDev, kEval };

const char* ToString(Key key);
const char* ToString(Partition partition);
Partition ParsePartition(std::string_view text);

// One protocol line: speaker, utterance, environment, attack, key.
struct TrialRecord {
  std::string speaker_id;
  std::string utt_id;
  std::optional<std::string> env_id;
  std::optional<std::string> attack_id;
  Key key = Key::kBonafide;

  bool operator==(const TrialRecord&) const = default;
};

struct ProtocolSet {
  std::vector<TrialRecord> records;
  Partition partition = Partition::kTrain;

  // Distinct speakers in first-appearance order.
  std::vector<std::string> Speakers() const;
  // Distinct attack ids, sorted.
  std::vector<std::string> Attacks() const;
  const TrialRecord* Find(std::string_view utt_id) const;
};

// Utterance id -> score; higher means more bonafide.
using ScoreSet = std::map<std::string, double>;

namespace dataio {

// Five whitespace-separated fields per non-empty line:
//   speaker utt env attack key
// "-" marks an absent env/attack. Throws ParseError with the line number.
ProtocolSet ParseProtocol(std::string_view text, Partition partition);
ProtocolSet ReadProtocol(const std::filesystem::path& path,
                         Partition partition);
std::string FormatProtocol(const ProtocolSet& protocol);
void WriteProtocol(const ProtocolSet& protocol,
                   const std::filesystem::path& path);

// Audio file of an utterance: <root>/<utt_id>.wav
std::filesystem::path AudioPath(const std::filesystem::path& root,
                                std::string_view utt_id);

// RIFF/WAVE, PCM16, mono. Throws FormatError otherwise.
Waveform LoadWaveform(const std::filesystem::path& path);
Waveform DecodeWav(std::string_view bytes);
// Samples are clipped to [-1, 1) and quantized to PCM16.
void WriteWaveform(const Waveform& wave, const std::filesystem::path& path);

// "<utt_id> <score>\n" per entry, shortest round-trip decimal form.
void WriteScores(const ScoreSet& scores, const std::filesystem::path& path);
ScoreSet ReadScores(const std::filesystem::path& path);
std::string FormatScores(const ScoreSet& scores);
ScoreSet ParseScores(std::string_view text);

// Feature cache, little-endian: "AFC1", u32 bins, u32 frames, u32 channels,
// then float32 payload in channel, frame, bin order. Values are narrowed to
// float32 on write.
std::string EncodeFeatureCache(const FeatureMap& features);
FeatureMap DecodeFeatureCache(std::string_view bytes);
void WriteFeatureCache(const FeatureMap& features,
                       const std::filesystem::path& path);
FeatureMap ReadFeatureCache(const std::filesystem::path& path);

std::string ReadFile(const std::filesystem::path& path);
void WriteFile(const std::filesystem::path& path, std::string_view bytes);

}  // namespace dataio
}  // namespace antispoof
