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

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "antispoof/common.h"

namespace antispoof {

// Mono audio. Samples are kept in double so utterance-level normalization
// is exact to machine precision; loaders scale PCM16 by 1/32768.
struct Waveform {
  std::vector<double> samples;
  int sample_rate = 16000;

  std::size_t size() const { return samples.size(); }
};

// Utterance id -> audio.
using WaveformStore = std::map<std::string, Waveform>;

// A bins x frames x channels array of features. Storage order matches the
// on-disk cache: channel-major, then frame-major, then bin.
class FeatureMap {
 public:
  FeatureMap() = default;
  FeatureMap(std::size_t bins, std::size_t frames, std::size_t channels);

  std::size_t bins() const { return bins_; }
  std::size_t frames() const { return frames_; }
  std::size_t channels() const { return channels_; }
  std::size_t size() const { return data_.size(); }

  double& at(std::size_t bin, std::size_t frame, std::size_t channel = 0) {
    return data_[(channel * frames_ + frame) * bins_ + bin];
  }
  double at(std::size_t bin, std::size_t frame, std::size_t channel = 0) const {
    return data_[(channel * frames_ + frame) * bins_ + bin];
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  // Frames [begin, begin + count) of every channel.
  FeatureMap SliceFrames(std::size_t begin, std::size_t count) const;

  bool operator==(const FeatureMap&) const = default;

 private:
  std::size_t bins_ = 0;
  std::size_t frames_ = 0;
  std::size_t channels_ = 0;
  std::vector<double> data_;
};

namespace dsp {

enum class WindowType { kHamming, kHann, kRectangular };

const char* ToString(WindowType type);

// Symmetric window of the given length.
std::vector<double> MakeWindow(WindowType type, std::size_t length);

struct SpectrogramConfig {
  std::size_t fft_size = 512;
  std::size_t win_length = 400;
  std::size_t hop = 160;
  WindowType window = WindowType::kHamming;
  std::size_t bins_kept = 256;

  void Validate() const;
  std::string ToString() const;
};

// |windowed DFT|^2 of each frame, first bins_kept bins, one channel.
// frames = 1 + (length - win_length) / hop.
FeatureMap PowerSpectrogram(const Waveform& wave, const SpectrogramConfig& cfg);

struct CqtConfig {
  double f_min = 31.25;
  std::size_t bins = 256;
  std::size_t bins_per_octave = 32;
  std::size_t hop = 160;
  double q_scale = 1.0;
  // Frame t is centred on sample t * hop + frame_offset. The default of half
  // a 25 ms window puts CQT frames on the spectrogram frame centres, so the
  // frame counts of the two features agree.
  std::size_t frame_offset = 200;

  void Validate(int sample_rate) const;
  std::string ToString() const;

  double CenterFrequency(std::size_t bin) const;
  double Q() const;
};

// Precomputed constant-Q kernels for one sample rate. Building the bank is
// the expensive part, so reuse it across utterances.
class CqtKernelBank {
 public:
  CqtKernelBank(const CqtConfig& cfg, int sample_rate);

  const CqtConfig& config() const { return cfg_; }
  int sample_rate() const { return sample_rate_; }

  FeatureMap Transform(const Waveform& wave) const;

 private:
  CqtConfig cfg_;
  int sample_rate_;
  // Per bin: conjugated, window-tapered kernel divided by its length, split
  // into real and imaginary parts. Element n multiplies signal sample
  // (centre - length / 2 + n).
  std::vector<std::vector<double>> real_;
  std::vector<std::vector<double>> imag_;
};

// Kernel length of a bin: round(Q * sample_rate / f_k).
std::size_t CqtKernelLength(const CqtConfig& cfg, int sample_rate,
                            std::size_t bin);

// Number of CQT frames for a signal of `length` samples.
std::size_t CqtFrameCount(const CqtConfig& cfg, std::size_t length);

FeatureMap Cqt(const Waveform& wave, const CqtConfig& cfg);

constexpr double kLogFloor = 1e-10;
constexpr double kStdFloor = 1e-8;

// log(max(v, floor)), then per (bin, channel) zero mean / unit variance over
// frames.
FeatureMap LogMvn(const FeatureMap& features, double floor = kLogFloor);

// Channel 0 = a, channel 1 = b, both truncated to the shorter frame count.
FeatureMap StackChannels(const FeatureMap& a, const FeatureMap& b);

// Zero mean, unit variance over the whole utterance.
Waveform WaveformMvn(const Waveform& wave);

struct VadConfig {
  std::size_t frame = 400;
  std::size_t hop = 160;
  double threshold_db = 40.0;

  std::string ToString() const;
};

// Utterance-level MVN followed by energy VAD.
Waveform PreprocessWaveform(const Waveform& wave, const VadConfig& vad = {});

// Drops hop-sized segments whose analysis frame is more than threshold_db
// below the loudest frame of the utterance. Segment i spans samples
// [i*hop, (i+1)*hop) and is judged by the mean-square energy of the `frame`
// samples starting at i*hop (clipped at the end of the signal). A trailing
// partial segment is kept unfiltered.
Waveform EnergyVad(const Waveform& wave, const VadConfig& cfg = {});

}  // namespace dsp
}  // namespace antispoof
