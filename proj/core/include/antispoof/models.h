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

#include <string>
#include <utility>
#include <vector>

#include "antispoof/common.h"
#include "antispoof/nnet/network.h"

namespace antispoof::models {

enum class ModelKind { kVgg, kLcnn, kSincNet };
enum class DropoutProfile { kStandard, kHigh };

const char* ToString(ModelKind kind);
ModelKind ParseModelKind(const std::string& text);
const char* ToString(DropoutProfile profile);
DropoutProfile ParseDropoutProfile(const std::string& text);

// Dropout of every SincNet hidden dense layer.
double DropoutRate(DropoutProfile profile);

struct ModelSpec {
  ModelKind kind = ModelKind::kVgg;
  // 1 = log power spectrogram, 2 = spectrogram + CQT. VGG/LCNN only.
  std::size_t input_channels = 2;
  // Scales the VGG/LCNN convolution widths and every hidden dense width. The
  // SincNet convolutions keep their full size.
  double width_multiplier = 1.0;
  DropoutProfile dropout_profile = DropoutProfile::kStandard;
  // Frequency rows of the VGG/LCNN input.
  std::size_t input_bins = 256;
  // SincNet input chunk, 200 ms at 16 kHz.
  std::size_t chunk_samples = 3200;
  int sample_rate = 16000;

  void Validate() const;
  // Channel count after scaling, rounded to an even number >= 2.
  std::size_t Width(std::size_t full) const;
  std::string ToString() const;
};

// Class index 0 is bonafide, 1 is spoof.
constexpr int kBonafideLabel = 0;
constexpr int kSpoofLabel = 1;

template <typename T>
class Model {
 public:
  Model(ModelSpec spec, nnet::Network<T> net)
      : spec_(std::move(spec)), net_(std::move(net)) {}

  const ModelSpec& spec() const { return spec_; }
  nnet::Network<T>& net() { return net_; }
  const nnet::Network<T>& net() const { return net_; }

  // Shape of one example without the batch axis: [bins, frames, channels]
  // for VGG/LCNN, [samples] for SincNet.
  nnet::Shape ExampleShape(std::size_t frames_or_samples) const;

  // Logits [B, 2]: (bonafide, spoof). SincNet emits log-probabilities.
  nnet::Tensor<T> ForwardLogits(const nnet::Tensor<T>& x, nnet::Mode mode);
  nnet::Tensor<T> InferLogits(const nnet::Tensor<T>& x) const;

  std::size_t CountParams() const;

 private:
  void CheckInput(const nnet::Shape& shape) const;
  ModelSpec spec_;
  nnet::Network<T> net_;
};

// The SincNet builder wires dropout to this generator; callers reseed it.
template <typename T>
Model<T> BuildVgg(const ModelSpec& spec, Rng& rng);
template <typename T>
Model<T> BuildLcnn(const ModelSpec& spec, Rng& rng);
template <typename T>
Model<T> BuildSincNet(const ModelSpec& spec, Rng& rng, Rng* dropout_rng);
template <typename T>
Model<T> BuildModel(const ModelSpec& spec, Rng& rng, Rng* dropout_rng);

// 81 mel-spaced edges between 30 Hz and 7970 Hz; filter i spans edges
// (i, i + 1). Returns Hz.
std::vector<std::pair<double, double>> MelSincBands(std::size_t filters,
                                                    double low_hz,
                                                    double high_hz);

constexpr std::size_t kSincFilters = 80;
constexpr std::size_t kSincLength = 251;

// True for layers listed in an architecture summary: everything except
// activations, dropout, normalization and time trimming.
bool IsTabulated(const std::string& layer_type);

}  // namespace antispoof::models
