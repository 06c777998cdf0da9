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

#include "antispoof/dsp.h"

#include <Eigen/Core>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

namespace antispoof {

FeatureMap::FeatureMap(std::size_t bins, std::size_t frames,
                       std::size_t channels)
    : bins_(bins),
      frames_(frames),
      channels_(channels),
      data_(bins * frames * channels, 0.0) {}

FeatureMap FeatureMap::SliceFrames(std::size_t begin, std::size_t count) const {
  if (begin + count > frames_)
    throw InputError("frame slice [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") exceeds " +
                     std::to_string(frames_) + " frames");
  FeatureMap out(bins_, count, channels_);
  for (std::size_t c = 0; c < channels_; ++c) {
    const double* src = data_.data() + (c * frames_ + begin) * bins_;
    std::copy(src, src + count * bins_,
              out.data_.data() + c * count * bins_);
  }
  return out;
}

namespace dsp {

using std::numbers::pi;

const char* ToString(WindowType type) {
  switch (type) {
    case WindowType::kHamming: return "hamming";
    case WindowType::kHann: return "hann";
    case WindowType::kRectangular: return "rectangular";
  }
  return "?";
}

std::vector<double> MakeWindow(WindowType type, std::size_t length) {
  std::vector<double> w(length, 1.0);
  if (length < 2 || type == WindowType::kRectangular) return w;
  const double denom = static_cast<double>(length - 1);
  for (std::size_t n = 0; n < length; ++n) {
    const double c = std::cos(2.0 * pi * static_cast<double>(n) / denom);
    w[n] = type == WindowType::kHamming ? 0.54 - 0.46 * c : 0.5 - 0.5 * c;
  }
  return w;
}

void SpectrogramConfig::Validate() const {
  if (fft_size == 0 || win_length == 0 || hop == 0)
    throw ConfigError("spectrogram fft_size, win_length and hop must be > 0");
  if (win_length > fft_size)
    throw ConfigError("spectrogram win_length exceeds fft_size");
  if (bins_kept == 0 || bins_kept > fft_size / 2 + 1)
    throw ConfigError("spectrogram bins_kept must be in [1, fft_size/2 + 1]");
}

std::string SpectrogramConfig::ToString() const {
  std::ostringstream ss;
  ss << "spectrogram fft=" << fft_size << " win=" << win_length
     << " hop=" << hop << " window=" << dsp::ToString(window)
     << " bins=" << bins_kept;
  return ss.str();
}

FeatureMap PowerSpectrogram(const Waveform& wave, const SpectrogramConfig& cfg) {
  cfg.Validate();
  const std::size_t n = wave.size();
  if (n < cfg.win_length)
    throw InputError("waveform of " + std::to_string(n) +
                     " samples is shorter than the minimum of " +
                     std::to_string(cfg.win_length));
  const std::size_t frames = 1 + (n - cfg.win_length) / cfg.hop;
  const auto window = MakeWindow(cfg.window, cfg.win_length);

  FeatureMap out(cfg.bins_kept, frames, 1);
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> buffer(cfg.fft_size, 0.0);
  std::vector<std::complex<double>> spectrum;
  for (std::size_t t = 0; t < frames; ++t) {
    const double* x = wave.samples.data() + t * cfg.hop;
    for (std::size_t i = 0; i < cfg.win_length; ++i) buffer[i] = x[i] * window[i];
    fft.fwd(spectrum, buffer);
    for (std::size_t b = 0; b < cfg.bins_kept; ++b)
      out.at(b, t) = std::norm(spectrum[b]);
  }
  return out;
}

void CqtConfig::Validate(int sample_rate) const {
  if (sample_rate <= 0) throw ConfigError("sample rate must be positive");
  if (bins == 0 || bins_per_octave == 0 || hop == 0)
    throw ConfigError("CQT bins, bins_per_octave and hop must be > 0");
  if (!(f_min > 0.0) || !(q_scale > 0.0))
    throw ConfigError("CQT f_min and q_scale must be > 0");
  const double f_max =
      f_min * std::exp2(static_cast<double>(bins) / bins_per_octave);
  if (f_max > sample_rate / 2.0)
    throw ConfigError("CQT f_max " + std::to_string(f_max) +
                      " Hz is above Nyquist " +
                      std::to_string(sample_rate / 2.0) + " Hz");
}

std::string CqtConfig::ToString() const {
  std::ostringstream ss;
  ss.precision(17);
  ss << "cqt fmin=" << f_min << " bins=" << bins << " bpo=" << bins_per_octave
     << " hop=" << hop << " q=" << q_scale << " offset=" << frame_offset
     << " window=hann";
  return ss.str();
}

double CqtConfig::CenterFrequency(std::size_t bin) const {
  return f_min * std::exp2(static_cast<double>(bin) / bins_per_octave);
}

double CqtConfig::Q() const {
  return q_scale / (std::exp2(1.0 / bins_per_octave) - 1.0);
}

std::size_t CqtKernelLength(const CqtConfig& cfg, int sample_rate,
                            std::size_t bin) {
  const double len = std::round(cfg.Q() * sample_rate / cfg.CenterFrequency(bin));
  return std::max<std::size_t>(1, static_cast<std::size_t>(len));
}

std::size_t CqtFrameCount(const CqtConfig& cfg, std::size_t length) {
  if (length < 2 * cfg.frame_offset || length == 0) return 0;
  return 1 + (length - 2 * cfg.frame_offset) / cfg.hop;
}

CqtKernelBank::CqtKernelBank(const CqtConfig& cfg, int sample_rate)
    : cfg_(cfg), sample_rate_(sample_rate) {
  cfg_.Validate(sample_rate);
  real_.resize(cfg_.bins);
  imag_.resize(cfg_.bins);
  for (std::size_t k = 0; k < cfg_.bins; ++k) {
    const std::size_t len = CqtKernelLength(cfg_, sample_rate, k);
    const auto window = MakeWindow(WindowType::kHann, len);
    const double omega = 2.0 * pi * cfg_.CenterFrequency(k) / sample_rate;
    real_[k].resize(len);
    imag_[k].resize(len);
    for (std::size_t n = 0; n < len; ++n) {
      const double phase = omega * static_cast<double>(n);
      const double scale = window[n] / static_cast<double>(len);
      real_[k][n] = scale * std::cos(phase);
      imag_[k][n] = -scale * std::sin(phase);
    }
  }
}

FeatureMap CqtKernelBank::Transform(const Waveform& wave) const {
  if (wave.sample_rate != sample_rate_)
    throw InputError("CQT kernels were built for " +
                     std::to_string(sample_rate_) + " Hz, waveform is " +
                     std::to_string(wave.sample_rate) + " Hz");
  const std::size_t n = wave.size();
  const std::size_t frames = CqtFrameCount(cfg_, n);
  if (frames == 0)
    throw InputError("waveform of " + std::to_string(n) +
                     " samples is shorter than the minimum of " +
                     std::to_string(std::max<std::size_t>(1, 2 * cfg_.frame_offset)));
  using Vec = Eigen::Map<const Eigen::VectorXd>;
  FeatureMap out(cfg_.bins, frames, 1);
  for (std::size_t t = 0; t < frames; ++t) {
    const auto centre =
        static_cast<std::ptrdiff_t>(t * cfg_.hop + cfg_.frame_offset);
    for (std::size_t k = 0; k < cfg_.bins; ++k) {
      const auto len = static_cast<std::ptrdiff_t>(real_[k].size());
      const std::ptrdiff_t start = centre - len / 2;
      const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -start);
      const std::ptrdiff_t hi =
          std::min<std::ptrdiff_t>(len, static_cast<std::ptrdiff_t>(n) - start);
      if (hi <= lo) continue;
      const Vec x(wave.samples.data() + start + lo, hi - lo);
      const double re = x.dot(Vec(real_[k].data() + lo, hi - lo));
      const double im = x.dot(Vec(imag_[k].data() + lo, hi - lo));
      out.at(k, t) = re * re + im * im;
    }
  }
  return out;
}

FeatureMap Cqt(const Waveform& wave, const CqtConfig& cfg) {
  return CqtKernelBank(cfg, wave.sample_rate).Transform(wave);
}

FeatureMap LogMvn(const FeatureMap& features, double floor) {
  FeatureMap out = features;
  const std::size_t frames = features.frames();
  std::vector<double> row(frames);
  for (std::size_t c = 0; c < features.channels(); ++c) {
    for (std::size_t b = 0; b < features.bins(); ++b) {
      bool constant = true;
      for (std::size_t t = 0; t < frames; ++t) {
        row[t] = std::log(std::max(features.at(b, t, c), floor));
        constant = constant && row[t] == row[0];
      }
      if (constant) {
        for (std::size_t t = 0; t < frames; ++t) out.at(b, t, c) = 0.0;
        continue;
      }
      double mean = 0.0;
      for (double v : row) mean += v;
      mean /= static_cast<double>(frames);
      double var = 0.0;
      for (double v : row) var += (v - mean) * (v - mean);
      var /= static_cast<double>(frames);
      const double inv = 1.0 / std::max(std::sqrt(var), kStdFloor);
      for (std::size_t t = 0; t < frames; ++t)
        out.at(b, t, c) = (row[t] - mean) * inv;
    }
  }
  return out;
}

FeatureMap StackChannels(const FeatureMap& a, const FeatureMap& b) {
  if (a.bins() != b.bins())
    throw InputError("cannot stack feature maps with " +
                     std::to_string(a.bins()) + " and " +
                     std::to_string(b.bins()) + " bins");
  if (a.channels() != 1 || b.channels() != 1)
    throw InputError("can only stack single-channel feature maps");
  const std::size_t frames = std::min(a.frames(), b.frames());
  FeatureMap out(a.bins(), frames, 2);
  for (std::size_t t = 0; t < frames; ++t)
    for (std::size_t k = 0; k < a.bins(); ++k) {
      out.at(k, t, 0) = a.at(k, t);
      out.at(k, t, 1) = b.at(k, t);
    }
  return out;
}

Waveform WaveformMvn(const Waveform& wave) {
  const std::size_t n = wave.size();
  if (n < 2)
    throw InputError("waveform MVN needs at least 2 samples, got " +
                     std::to_string(n));
  const auto [lo, hi] = std::minmax_element(wave.samples.begin(), wave.samples.end());
  if (*lo == *hi) throw InputError("waveform MVN of a constant signal");
  double mean = 0.0;
  for (double x : wave.samples) mean += x;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double x : wave.samples) var += (x - mean) * (x - mean);
  var /= static_cast<double>(n);
  if (!(var > 0.0)) throw InputError("waveform MVN of a constant signal");
  const double inv = 1.0 / std::sqrt(var);
  Waveform out{std::vector<double>(n), wave.sample_rate};
  for (std::size_t i = 0; i < n; ++i) out.samples[i] = (wave.samples[i] - mean) * inv;
  return out;
}

std::string VadConfig::ToString() const {
  std::ostringstream ss;
  ss.precision(17);
  ss << "vad frame=" << frame << " hop=" << hop << " threshold_db=" << threshold_db;
  return ss.str();
}

Waveform EnergyVad(const Waveform& wave, const VadConfig& cfg) {
  if (cfg.frame == 0 || cfg.hop == 0)
    throw ConfigError("VAD frame and hop must be > 0");
  const std::size_t n = wave.size();
  if (n < cfg.frame)
    throw InputError("waveform of " + std::to_string(n) +
                     " samples is shorter than one VAD frame (" +
                     std::to_string(cfg.frame) + ")");
  const std::size_t segments = n / cfg.hop;
  std::vector<double> energy(segments, 0.0);
  double max_energy = 0.0;
  for (std::size_t i = 0; i < segments; ++i) {
    const std::size_t begin = i * cfg.hop;
    const std::size_t end = std::min(begin + cfg.frame, n);
    double e = 0.0;
    for (std::size_t j = begin; j < end; ++j) e += wave.samples[j] * wave.samples[j];
    energy[i] = e / static_cast<double>(end - begin);
    max_energy = std::max(max_energy, energy[i]);
  }
  if (!(max_energy > 0.0)) throw InputError("VAD removed every frame (silent input)");
  const double min_ratio = std::pow(10.0, -cfg.threshold_db / 10.0);
  Waveform out{{}, wave.sample_rate};
  out.samples.reserve(n);
  for (std::size_t i = 0; i < segments; ++i) {
    if (energy[i] < max_energy * min_ratio) continue;
    const auto first = wave.samples.begin() + static_cast<std::ptrdiff_t>(i * cfg.hop);
    out.samples.insert(out.samples.end(), first, first + static_cast<std::ptrdiff_t>(cfg.hop));
  }
  if (out.samples.empty()) throw InputError("VAD removed every frame");
  out.samples.insert(out.samples.end(),
                     wave.samples.begin() + static_cast<std::ptrdiff_t>(segments * cfg.hop),
                     wave.samples.end());
  return out;
}

Waveform PreprocessWaveform(const Waveform& wave, const VadConfig& vad) {
  return EnergyVad(WaveformMvn(wave), vad);
}

}  // namespace dsp
}  // namespace antispoof
