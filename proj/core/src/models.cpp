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

#include "antispoof/models.h"

#include <cmath>
#include <sstream>

namespace antispoof::models {

using nnet::Shape;
using nnet::Tensor;

const char* ToString(ModelKind kind) {
  switch (kind) {
    case ModelKind::kVgg: return "vgg";
    case ModelKind::kLcnn: return "lcnn";
    case ModelKind::kSincNet: return "sincnet";
  }
  return "?";
}

ModelKind ParseModelKind(const std::string& text) {
  if (text == "vgg") return ModelKind::kVgg;
  if (text == "lcnn") return ModelKind::kLcnn;
  if (text == "sincnet") return ModelKind::kSincNet;
  throw ConfigError("unknown model kind '" + text + "' (expected vgg, lcnn or sincnet)");
}

const char* ToString(DropoutProfile profile) {
  return profile == DropoutProfile::kHigh ? "high" : "standard";
}

DropoutProfile ParseDropoutProfile(const std::string& text) {
  if (text == "standard") return DropoutProfile::kStandard;
  if (text == "high") return DropoutProfile::kHigh;
  throw ConfigError("unknown dropout profile '" + text + "' (expected standard or high)");
}

double DropoutRate(DropoutProfile profile) {
  return profile == DropoutProfile::kHigh ? 0.7 : 0.5;
}

namespace {

// Six 2x frequency poolings take the input rows down to the 4 rows of the
// mean-pooling stage.
constexpr std::size_t kFreqReduction = 64;
constexpr std::size_t kSincPool = 3;
constexpr std::size_t kSincConvFilters = 60;
constexpr std::size_t kSincConvLength = 5;
constexpr std::size_t kSincDense = 2048;
constexpr double kSincSlope = 0.2;
constexpr double kMelLowHz = 30.0;
constexpr double kMelHighHz = 7970.0;

}  // namespace

void ModelSpec::Validate() const {
  if (!(width_multiplier > 0.0 && width_multiplier <= 1.0))
    throw ConfigError("width_multiplier must be in (0, 1], got " +
                      std::to_string(width_multiplier));
  if (sample_rate <= 0) throw ConfigError("sample_rate must be positive");
  if (kind == ModelKind::kSincNet) {
    if (chunk_samples < kSincLength)
      throw ConfigError("SincNet chunk of " + std::to_string(chunk_samples) +
                        " samples is shorter than the sinc filter length");
    if (2.0 * kMelHighHz > sample_rate)
      throw ConfigError("SincNet mel initialization needs a sample rate of at least " +
                        std::to_string(static_cast<int>(2 * kMelHighHz)) + " Hz");
    return;
  }
  if (input_channels != 1 && input_channels != 2)
    throw ConfigError("input_channels must be 1 or 2, got " +
                      std::to_string(input_channels));
  if (input_bins == 0 || input_bins % kFreqReduction != 0)
    throw ConfigError("input_bins must be a positive multiple of " +
                      std::to_string(kFreqReduction) + ", got " +
                      std::to_string(input_bins));
}

std::size_t ModelSpec::Width(std::size_t full) const {
  const auto scaled =
      static_cast<std::size_t>(std::lround(static_cast<double>(full) * width_multiplier));
  return std::max<std::size_t>(2, scaled + scaled % 2);
}

std::string ModelSpec::ToString() const {
  std::ostringstream ss;
  ss << "kind=" << models::ToString(kind) << "\n"
     << "input_channels=" << input_channels << "\n"
     << "width_multiplier=" << width_multiplier << "\n"
     << "dropout_profile=" << models::ToString(dropout_profile) << "\n"
     << "input_bins=" << input_bins << "\n"
     << "chunk_samples=" << chunk_samples << "\n"
     << "sample_rate=" << sample_rate << "\n";
  return ss.str();
}

template <typename T>
Shape Model<T>::ExampleShape(std::size_t frames_or_samples) const {
  if (spec_.kind == ModelKind::kSincNet) return {frames_or_samples};
  return {spec_.input_bins, frames_or_samples, spec_.input_channels};
}

template <typename T>
void Model<T>::CheckInput(const Shape& shape) const {
  if (spec_.kind == ModelKind::kSincNet) {
    if (shape.size() != 2 || shape[1] != spec_.chunk_samples)
      throw ShapeError("SincNet expects [batch, " + std::to_string(spec_.chunk_samples) +
                       "], got " + nnet::ShapeString(shape));
    return;
  }
  if (shape.size() != 4 || shape[1] != spec_.input_bins ||
      shape[3] != spec_.input_channels || shape[2] < 2)
    throw ShapeError(std::string(ToString(spec_.kind)) + " expects [batch, " +
                     std::to_string(spec_.input_bins) + ", frames >= 2, " +
                     std::to_string(spec_.input_channels) + "], got " +
                     nnet::ShapeString(shape));
}

template <typename T>
Tensor<T> Model<T>::ForwardLogits(const Tensor<T>& x, nnet::Mode mode) {
  CheckInput(x.shape());
  return net_.Forward(x, mode);
}

template <typename T>
Tensor<T> Model<T>::InferLogits(const Tensor<T>& x) const {
  CheckInput(x.shape());
  return net_.Infer(x);
}

template <typename T>
std::size_t Model<T>::CountParams() const {
  std::size_t n = 0;
  for (const auto* p : net_.Params())
    if (p->trainable) n += p->value.size();
  return n;
}

namespace {

template <typename T>
void AddConv2d(nnet::Network<T>& net, const std::string& name, std::size_t in,
               std::size_t out, std::size_t k, Rng& rng) {
  auto& conv = net.template Add<nnet::Conv2d<T>>(name, in, out, k, k);
  nnet::InitHeNormal(conv.weight(), in * k * k, rng);
}

template <typename T>
void AddDense(nnet::Network<T>& net, const std::string& name, std::size_t in,
              std::size_t out, Rng& rng) {
  auto& dense = net.template Add<nnet::Dense<T>>(name, in, out);
  nnet::InitHeNormal(dense.weight(), in, rng);
}

// Mean pooling over time, flatten, two ReLU dense layers and the 2-way
// output shared by VGG and LCNN.
template <typename T>
void AddCnnTail(nnet::Network<T>& net, const ModelSpec& spec, std::size_t channels,
                Rng& rng) {
  net.template Add<nnet::TemporalMeanPool<T>>("MeanPooling");
  net.template Add<nnet::Flatten<T>>("Flatten");
  const std::size_t flat = spec.input_bins / kFreqReduction * channels;
  const std::size_t hidden = spec.Width(512);
  AddDense(net, "Dense1", flat, hidden, rng);
  net.template Add<nnet::LeakyRelu<T>>("ReLU-Dense1", T(0));
  AddDense(net, "Dense2", hidden, hidden, rng);
  net.template Add<nnet::LeakyRelu<T>>("ReLU-Dense2", T(0));
  AddDense(net, "Dense3", hidden, 2, rng);
}

}  // namespace

template <typename T>
Model<T> BuildVgg(const ModelSpec& spec, Rng& rng) {
  if (spec.kind != ModelKind::kVgg) throw ConfigError("BuildVgg needs kind vgg");
  spec.Validate();
  nnet::Network<T> net;
  const std::size_t widths[6] = {32, 64, 128, 256, 256, 256};
  std::size_t in = spec.input_channels;
  for (std::size_t block = 1; block <= 6; ++block) {
    const std::size_t out = spec.Width(widths[block - 1]);
    const std::string b = std::to_string(block);
    for (std::size_t j = 1; j <= 2; ++j) {
      const std::string name = "Conv2D-" + b + "-" + std::to_string(j);
      AddConv2d(net, name, in, out, 3, rng);
      net.template Add<nnet::LeakyRelu<T>>("ReLU-" + b + "-" + std::to_string(j), T(0));
      in = out;
    }
    if (block == 3) {
      net.template Add<nnet::TimeTrim<T>>("TimeTrim", 2);
      net.template Add<nnet::MaxPool2d<T>>("MaxPooling-" + b, 2, 2);
    } else {
      net.template Add<nnet::MaxPool2d<T>>("MaxPooling-" + b, 2, 1);
    }
  }
  AddCnnTail(net, spec, in, rng);
  return Model<T>(spec, std::move(net));
}

template <typename T>
Model<T> BuildLcnn(const ModelSpec& spec, Rng& rng) {
  if (spec.kind != ModelKind::kLcnn) throw ConfigError("BuildLcnn needs kind lcnn");
  spec.Validate();
  nnet::Network<T> net;
  std::size_t in = spec.input_channels;
  {
    const std::size_t out = spec.Width(32);
    AddConv2d(net, "Conv2D-1-1", in, out, 5, rng);
    net.template Add<nnet::Mfm<T>>("MFM-1-1");
    net.template Add<nnet::MaxPool2d<T>>("MaxPooling-1", 2, 1);
    in = out / 2;
  }
  // Per block: 1x1 convolution width, 3x3 convolution width (before MFM).
  const std::size_t widths[5][2] = {{32, 64}, {64, 128}, {128, 256}, {256, 512}, {512, 512}};
  for (std::size_t block = 2; block <= 6; ++block) {
    const std::string b = std::to_string(block);
    const std::size_t w1 = spec.Width(widths[block - 2][0]);
    const std::size_t w2 = spec.Width(widths[block - 2][1]);
    AddConv2d(net, "Conv2D-" + b + "-1", in, w1, 1, rng);
    net.template Add<nnet::Mfm<T>>("MFM-" + b + "-1");
    AddConv2d(net, "Conv2D-" + b + "-2", w1 / 2, w2, 3, rng);
    net.template Add<nnet::Mfm<T>>("MFM-" + b + "-2");
    in = w2 / 2;
    if (block == 3) {
      net.template Add<nnet::TimeTrim<T>>("TimeTrim", 2);
      net.template Add<nnet::MaxPool2d<T>>("MaxPooling-" + b, 2, 2);
    } else {
      net.template Add<nnet::MaxPool2d<T>>("MaxPooling-" + b, 2, 1);
    }
  }
  AddCnnTail(net, spec, in, rng);
  return Model<T>(spec, std::move(net));
}

std::vector<std::pair<double, double>> MelSincBands(std::size_t filters,
                                                    double low_hz, double high_hz) {
  if (filters == 0 || !(low_hz > 0.0 && high_hz > low_hz))
    throw ConfigError("mel band layout needs filters > 0 and 0 < low < high");
  const auto to_mel = [](double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); };
  const auto to_hz = [](double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); };
  const double m0 = to_mel(low_hz), m1 = to_mel(high_hz);
  std::vector<double> edges(filters + 1);
  for (std::size_t i = 0; i <= filters; ++i)
    edges[i] = to_hz(m0 + (m1 - m0) * static_cast<double>(i) / static_cast<double>(filters));
  // Pin the end points against round-off in the mel round trip.
  edges.front() = low_hz;
  edges.back() = high_hz;
  std::vector<std::pair<double, double>> bands(filters);
  for (std::size_t i = 0; i < filters; ++i) bands[i] = {edges[i], edges[i + 1]};
  return bands;
}

template <typename T>
Model<T> BuildSincNet(const ModelSpec& spec, Rng& rng, Rng* dropout_rng) {
  if (spec.kind != ModelKind::kSincNet) throw ConfigError("BuildSincNet needs kind sincnet");
  spec.Validate();
  nnet::Network<T> net;
  const T slope = static_cast<T>(kSincSlope);
  auto& sinc = net.template Add<nnet::SincConv1d<T>>("SincConv", kSincFilters, kSincLength);
  const auto bands = MelSincBands(kSincFilters, kMelLowHz, kMelHighHz);
  const double sr = spec.sample_rate;
  for (std::size_t k = 0; k < kSincFilters; ++k) {
    sinc.cutoffs().value[2 * k] = static_cast<T>(bands[k].first / sr);
    sinc.cutoffs().value[2 * k + 1] = static_cast<T>(bands[k].second / sr);
  }
  net.template Add<nnet::Abs<T>>("Abs");
  net.template Add<nnet::MaxPool1d<T>>("MaxPool-1", kSincPool);
  net.template Add<nnet::LayerNorm<T>>("LayerNorm-1", kSincFilters);
  net.template Add<nnet::LeakyRelu<T>>("LeakyReLU-1", slope);
  std::size_t length = (spec.chunk_samples - kSincLength + 1) / kSincPool;
  std::size_t channels = kSincFilters;
  for (std::size_t i = 2; i <= 3; ++i) {
    const std::string n = std::to_string(i);
    auto& conv = net.template Add<nnet::Conv1d<T>>("Conv1D-" + n, channels,
                                                   kSincConvFilters, kSincConvLength);
    nnet::InitHeNormal(conv.weight(), channels * kSincConvLength, rng);
    net.template Add<nnet::MaxPool1d<T>>("MaxPool-" + n, kSincPool);
    net.template Add<nnet::LayerNorm<T>>("LayerNorm-" + n, kSincConvFilters);
    net.template Add<nnet::LeakyRelu<T>>("LeakyReLU-" + n, slope);
    channels = kSincConvFilters;
    if (length < kSincConvLength + kSincPool - 1)
      throw ConfigError("SincNet chunk of " + std::to_string(spec.chunk_samples) +
                        " samples is too short for the convolution stack");
    length = (length - kSincConvLength + 1) / kSincPool;
  }
  net.template Add<nnet::Flatten<T>>("Flatten");
  std::size_t in = length * channels;
  const std::size_t hidden = spec.Width(kSincDense);
  const double rate = DropoutRate(spec.dropout_profile);
  for (std::size_t i = 1; i <= 3; ++i) {
    const std::string n = std::to_string(i);
    AddDense(net, "Dense" + n, in, hidden, rng);
    net.template Add<nnet::BatchNorm<T>>("BatchNorm-Dense" + n, hidden);
    net.template Add<nnet::LeakyRelu<T>>("LeakyReLU-Dense" + n, slope);
    net.template Add<nnet::Dropout<T>>("Dropout-Dense" + n, rate, dropout_rng);
    in = hidden;
  }
  AddDense(net, "Dense4", in, 2, rng);
  net.template Add<nnet::LogSoftmax<T>>("LogSoftmax");
  return Model<T>(spec, std::move(net));
}

template <typename T>
Model<T> BuildModel(const ModelSpec& spec, Rng& rng, Rng* dropout_rng) {
  switch (spec.kind) {
    case ModelKind::kVgg: return BuildVgg<T>(spec, rng);
    case ModelKind::kLcnn: return BuildLcnn<T>(spec, rng);
    case ModelKind::kSincNet: return BuildSincNet<T>(spec, rng, dropout_rng);
  }
  throw ConfigError("unknown model kind");
}

bool IsTabulated(const std::string& layer_type) {
  return layer_type == "conv2d" || layer_type == "maxpool2d" || layer_type == "mfm" ||
         layer_type == "temporal_mean_pool" || layer_type == "flatten" ||
         layer_type == "dense";
}

#define ANTISPOOF_INSTANTIATE(T)                                      \
  template class Model<T>;                                            \
  template Model<T> BuildVgg<T>(const ModelSpec&, Rng&);              \
  template Model<T> BuildLcnn<T>(const ModelSpec&, Rng&);             \
  template Model<T> BuildSincNet<T>(const ModelSpec&, Rng&, Rng*);    \
  template Model<T> BuildModel<T>(const ModelSpec&, Rng&, Rng*);

ANTISPOOF_INSTANTIATE(float)
ANTISPOOF_INSTANTIATE(double)

#undef ANTISPOOF_INSTANTIATE

}  // namespace antispoof::models
