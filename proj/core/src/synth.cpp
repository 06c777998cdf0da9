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

#include "antispoof/synth.h"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <numbers>

namespace antispoof::synth {
namespace {

constexpr double kPeak = 0.5;
constexpr std::size_t kLowPassTaps = 129;

void NormalizePeak(std::vector<double>& x, double peak) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  if (m > 0.0)
    for (double& v : x) v *= peak / m;
}

// Linear convolution truncated to the length of `x`.
std::vector<double> Convolve(const std::vector<double>& x, const std::vector<double>& h) {
  std::size_t n = 1;
  while (n < x.size() + h.size() - 1) n *= 2;
  std::vector<double> xp(x), hp(h);
  xp.resize(n, 0.0);
  hp.resize(n, 0.0);
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> X, H;
  fft.fwd(X, xp);
  fft.fwd(H, hp);
  for (std::size_t i = 0; i < X.size(); ++i) X[i] *= H[i];
  std::vector<double> y;
  fft.inv(y, X);
  y.resize(x.size());
  return y;
}

std::vector<double> LowPassKernel(double cutoff_hz, int sample_rate) {
  const double fc = cutoff_hz / sample_rate;
  const auto half = static_cast<std::ptrdiff_t>(kLowPassTaps / 2);
  std::vector<double> h(kLowPassTaps);
  double sum = 0.0;
  for (std::size_t i = 0; i < kLowPassTaps; ++i) {
    const auto n = static_cast<double>(static_cast<std::ptrdiff_t>(i) - half);
    const double ideal =
        n == 0.0 ? 2.0 * fc : std::sin(2.0 * std::numbers::pi * fc * n) / (std::numbers::pi * n);
    const double w = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                            static_cast<double>(kLowPassTaps - 1));
    h[i] = ideal * w;
    sum += h[i];
  }
  for (double& v : h) v /= sum;
  return h;
}

}  // namespace

AttackChannel AttackOf(std::size_t attack) {
  return {2500.0 + 1000.0 * static_cast<double>(attack % 4),
          0.02 + 0.015 * static_cast<double>(attack % 5)};
}

std::string AttackName(std::size_t attack) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "A%02zu", attack + 1);
  return buf;
}

Waveform BonafideUtterance(double f0_hz, double duration_s, int sample_rate, Rng& rng) {
  if (!(f0_hz > 0.0) || !(duration_s > 0.0) || sample_rate <= 0)
    throw ConfigError("synthetic utterance needs positive pitch, duration and rate");
  const auto n = static_cast<std::size_t>(std::lround(duration_s * sample_rate));
  const double sr = sample_rate;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  // Syllable envelope: voiced stretches separated by short pauses, with
  // raised-cosine ramps.
  std::vector<double> env(n, 0.0);
  std::size_t pos = static_cast<std::size_t>((0.02 + 0.05 * unit(rng)) * sr);
  while (pos < n) {
    const auto len = static_cast<std::size_t>((0.15 + 0.15 * unit(rng)) * sr);
    const auto ramp = static_cast<std::size_t>(0.02 * sr);
    for (std::size_t i = 0; i < len && pos + i < n; ++i) {
      double a = 1.0;
      if (i < ramp) a = 0.5 - 0.5 * std::cos(std::numbers::pi * i / ramp);
      if (len - i < ramp) a = 0.5 - 0.5 * std::cos(std::numbers::pi * (len - i) / ramp);
      env[pos + i] = a;
    }
    pos += len + static_cast<std::size_t>((0.03 + 0.05 * unit(rng)) * sr);
  }

  const std::size_t harmonics =
      std::max<std::size_t>(1, static_cast<std::size_t>(0.95 * sr / 2.0 / (f0_hz * 1.06)));
  std::vector<double> amp(harmonics), phase(harmonics);
  for (std::size_t k = 0; k < harmonics; ++k) {
    amp[k] = (0.7 + 0.6 * unit(rng)) / std::sqrt(static_cast<double>(k + 1));
    phase[k] = 2.0 * std::numbers::pi * unit(rng);
  }
  const double vibrato_hz = 3.0 + 3.0 * unit(rng);
  const double vibrato_phase = 2.0 * std::numbers::pi * unit(rng);

  Waveform wave;
  wave.sample_rate = sample_rate;
  wave.samples.assign(n, 0.0);
  double theta = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sr;
    const double f = f0_hz * (1.0 + 0.05 * std::sin(2.0 * std::numbers::pi * vibrato_hz * t +
                                                     vibrato_phase));
    theta += 2.0 * std::numbers::pi * f / sr;
    double v = 0.0;
    if (env[i] > 0.0)
      for (std::size_t k = 0; k < harmonics; ++k)
        v += amp[k] * std::sin(static_cast<double>(k + 1) * theta + phase[k]);
    // Breath noise while voiced, plus a faint broadband floor everywhere.
    wave.samples[i] = env[i] * (v + 0.05 * gauss(rng)) + 0.003 * gauss(rng);
  }
  NormalizePeak(wave.samples, kPeak);
  return wave;
}

Waveform ApplyAttack(const Waveform& wave, const AttackChannel& channel, Rng& rng) {
  if (!(channel.cutoff_hz > 0.0 && channel.cutoff_hz < wave.sample_rate / 2.0) ||
      !(channel.reverb_decay_s > 0.0))
    throw ConfigError("attack channel needs a cutoff below Nyquist and a positive decay");
  std::vector<double> y = Convolve(wave.samples, LowPassKernel(channel.cutoff_hz, wave.sample_rate));
  // Room response: direct path plus an exponentially decaying noise tail.
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double sr = wave.sample_rate;
  const auto tail = static_cast<std::size_t>(4.0 * channel.reverb_decay_s * sr);
  const auto onset = static_cast<std::size_t>(0.001 * sr);
  std::vector<double> ir(onset + tail, 0.0);
  ir[0] = 1.0;
  for (std::size_t i = 0; i < tail; ++i)
    ir[onset + i] = 0.3 * std::exp(-static_cast<double>(i) / (channel.reverb_decay_s * sr)) *
                    gauss(rng) / std::sqrt(channel.reverb_decay_s * sr);
  Waveform out;
  out.sample_rate = wave.sample_rate;
  out.samples = Convolve(y, ir);
  NormalizePeak(out.samples, kPeak);
  return out;
}

Corpus MakeCorpus(const CorpusConfig& config, Partition partition, Rng& rng) {
  if (config.speakers == 0 || config.bonafide_per_speaker == 0)
    throw ConfigError("synthetic corpus needs speakers and bonafide utterances");
  Corpus corpus;
  corpus.protocol.partition = partition;
  std::uniform_real_distribution<double> pitch(90.0, 260.0);
  std::uniform_real_distribution<double> wobble(0.95, 1.05);
  std::size_t counter = 0;
  char buf[64];
  auto add = [&](const std::string& speaker, Waveform wave, std::optional<std::string> attack) {
    std::snprintf(buf, sizeof(buf), "%s_%06zu", config.utt_prefix.c_str(), ++counter);
    TrialRecord r;
    r.speaker_id = speaker;
    r.utt_id = buf;
    if (!config.env_id.empty()) r.env_id = config.env_id;
    r.attack_id = std::move(attack);
    r.key = r.attack_id ? Key::kSpoof : Key::kBonafide;
    corpus.audio.emplace(r.utt_id, std::move(wave));
    corpus.protocol.records.push_back(std::move(r));
  };
  for (std::size_t s = 0; s < config.speakers; ++s) {
    std::snprintf(buf, sizeof(buf), "%s_%04zu", config.speaker_prefix.c_str(), s + 1);
    const std::string speaker = buf;
    const double f0 = pitch(rng);
    for (std::size_t u = 0; u < config.bonafide_per_speaker; ++u)
      add(speaker, BonafideUtterance(f0 * wobble(rng), config.duration_s, config.sample_rate, rng),
          std::nullopt);
    for (std::size_t a = 0; a < config.attacks; ++a)
      for (std::size_t u = 0; u < config.spoof_per_speaker_per_attack; ++u) {
        const Waveform clean =
            BonafideUtterance(f0 * wobble(rng), config.duration_s, config.sample_rate, rng);
        add(speaker, ApplyAttack(clean, AttackOf(a), rng), AttackName(a));
      }
  }
  return corpus;
}

void WriteCorpus(const Corpus& corpus, const std::filesystem::path& audio_root,
                 const std::filesystem::path& protocol_path) {
  for (const auto& r : corpus.protocol.records)
    dataio::WriteWaveform(corpus.audio.at(r.utt_id), dataio::AudioPath(audio_root, r.utt_id));
  dataio::WriteProtocol(corpus.protocol, protocol_path);
}

}  // namespace antispoof::synth
