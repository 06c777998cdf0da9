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
#include <string>
#include <vector>

#include "antispoof/common.h"
#include "antispoof/dataio.h"
#include "antispoof/dsp.h"

namespace antispoof::synth {

// A small two-class corpus for end-to-end checks. Bonafide utterances are
// syllable-like harmonic tones with speaker-specific pitch. Spoofed ones are
// bonafide-style tones passed through an attack channel: a low-pass filter
// followed by a synthetic room reverb, with a different cutoff and decay per
// attack.
struct CorpusConfig {
  std::size_t speakers = 4;
  std::size_t bonafide_per_speaker = 50;
  std::size_t spoof_per_speaker_per_attack = 13;
  std::size_t attacks = 4;
  double duration_s = 1.0;
  int sample_rate = 16000;
  std::string speaker_prefix = "SPK";
  std::string utt_prefix = "UTT";
  // Stamped on every record's env field; empty means absent.
  std::string env_id;
};

struct AttackChannel {
  double cutoff_hz;
  double reverb_decay_s;
};

AttackChannel AttackOf(std::size_t attack);
// "A01", "A02", ...
std::string AttackName(std::size_t attack);

Waveform BonafideUtterance(double f0_hz, double duration_s, int sample_rate,
                           Rng& rng);
Waveform ApplyAttack(const Waveform& wave, const AttackChannel& channel,
                     Rng& rng);

struct Corpus {
  ProtocolSet protocol;
  WaveformStore audio;
};

Corpus MakeCorpus(const CorpusConfig& config, Partition partition, Rng& rng);

// Writes <root>/<utt>.wav for every utterance and the protocol file.
void WriteCorpus(const Corpus& corpus, const std::filesystem::path& audio_root,
                 const std::filesystem::path& protocol_path);

}  // namespace antispoof::synth
