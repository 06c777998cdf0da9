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

// Throughput of the hot paths: feature extraction, the network layers the
// models spend their time in, one training step and the metrics.

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "antispoof/dsp.h"
#include "antispoof/eval.h"
#include "antispoof/models.h"
#include "antispoof/nnet/layers.h"
#include "antispoof/nnet/optim.h"
#include "antispoof/pipeline.h"

using namespace antispoof;

namespace {

Waveform Noise(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> g(0.0, 0.3);
  Waveform w;
  w.samples.resize(n);
  for (double& v : w.samples) v = g(rng);
  return w;
}

nnet::Tensor<float> RandomFloat(const nnet::Shape& shape, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<float> g(0.0f, 1.0f);
  nnet::Tensor<float> t(shape);
  for (float& v : t.values()) v = g(rng);
  return t;
}

// Seconds of audio per iteration.
void BM_PowerSpectrogram(benchmark::State& state) {
  const Waveform w = Noise(static_cast<std::size_t>(state.range(0)) * 16000, 1);
  for (auto _ : state) benchmark::DoNotOptimize(dsp::PowerSpectrogram(w, {}));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PowerSpectrogram)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_CqtKernelBank(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(dsp::CqtKernelBank({}, 16000));
}
BENCHMARK(BM_CqtKernelBank)->Unit(benchmark::kMillisecond);

void BM_CqtTransform(benchmark::State& state) {
  const dsp::CqtKernelBank bank({}, 16000);
  const Waveform w = Noise(static_cast<std::size_t>(state.range(0)) * 16000, 2);
  for (auto _ : state) benchmark::DoNotOptimize(bank.Transform(w));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CqtTransform)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_LogMvn(benchmark::State& state) {
  const FeatureMap s = dsp::PowerSpectrogram(Noise(16000, 3), {});
  for (auto _ : state) benchmark::DoNotOptimize(dsp::LogMvn(s));
}
BENCHMARK(BM_LogMvn)->Unit(benchmark::kMicrosecond);

// A 3x3 convolution at the resolution of the first VGG block; the argument
// is the channel count.
void BM_Conv2dForward(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  Rng rng(4);
  nnet::Conv2d<float> conv("conv", c, c, 3, 3);
  nnet::InitHeNormal(conv.weight(), 9 * c, rng);
  const auto x = RandomFloat({8, 128, 100, c}, 5);
  for (auto _ : state) benchmark::DoNotOptimize(conv.Infer(x));
}
BENCHMARK(BM_Conv2dForward)->Arg(4)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_Conv2dTrainStep(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  Rng rng(6);
  nnet::Conv2d<float> conv("conv", c, c, 3, 3);
  nnet::InitHeNormal(conv.weight(), 9 * c, rng);
  const auto x = RandomFloat({8, 128, 100, c}, 7);
  const auto dy = RandomFloat({8, 128, 100, c}, 8);
  for (auto _ : state) {
    benchmark::DoNotOptimize(conv.Train(x));
    benchmark::DoNotOptimize(conv.Backward(dy));
  }
}
BENCHMARK(BM_Conv2dTrainStep)->Arg(4)->Arg(32)->Unit(benchmark::kMillisecond);

// 80 sinc filters of 251 taps over a batch of 200 ms chunks.
void BM_SincConvForward(benchmark::State& state) {
  nnet::SincConv1d<float> sinc("sinc", models::kSincFilters, models::kSincLength);
  const auto bands = models::MelSincBands(models::kSincFilters, 30.0, 8000.0);
  for (std::size_t k = 0; k < bands.size(); ++k) {
    sinc.cutoffs().value[2 * k] = static_cast<float>(bands[k].first / 16000.0);
    sinc.cutoffs().value[2 * k + 1] = static_cast<float>(bands[k].second / 16000.0);
  }
  const auto x = RandomFloat({static_cast<std::size_t>(state.range(0)), 3200}, 9);
  for (auto _ : state) benchmark::DoNotOptimize(sinc.Infer(x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SincConvForward)->Arg(8)->Arg(64)->Unit(benchmark::kMillisecond);

// One optimizer step of a whole model on a batch; the argument is the batch
// size. Items are training examples.
void ModelTrainStep(benchmark::State& state, models::ModelSpec spec, nnet::Shape example) {
  Rng rng(10), dropout(11);
  auto model = models::BuildModel<float>(spec, rng, &dropout);
  nnet::Optimizer<float> opt({nnet::OptimizerKind::kAdam, 1e-4}, model.net().TrainableParams());
  const auto batch = static_cast<std::size_t>(state.range(0));
  example.insert(example.begin(), batch);
  const auto x = RandomFloat(example, 12);
  std::vector<int> labels(batch);
  for (std::size_t i = 0; i < batch; ++i) labels[i] = static_cast<int>(i % 2);
  for (auto _ : state) {
    const auto logits = model.ForwardLogits(x, nnet::Mode::kTrain);
    nnet::Tensor<float> grad;
    benchmark::DoNotOptimize(nnet::SoftmaxCrossEntropy<float>(logits, labels, &grad));
    model.net().Backward(grad);
    opt.Step();
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_VggTrainStep(benchmark::State& state) {
  models::ModelSpec spec;
  spec.width_multiplier = 0.125;
  ModelTrainStep(state, spec, {256, 100, 2});
}
BENCHMARK(BM_VggTrainStep)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_LcnnTrainStep(benchmark::State& state) {
  models::ModelSpec spec;
  spec.kind = models::ModelKind::kLcnn;
  spec.width_multiplier = 0.125;
  ModelTrainStep(state, spec, {256, 100, 2});
}
BENCHMARK(BM_LcnnTrainStep)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_SincNetTrainStep(benchmark::State& state) {
  models::ModelSpec spec;
  spec.kind = models::ModelKind::kSincNet;
  spec.width_multiplier = 0.0625;
  ModelTrainStep(state, spec, {3200});
}
BENCHMARK(BM_SincNetTrainStep)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_ComputeEer(benchmark::State& state) {
  Rng rng(13);
  std::normal_distribution<double> bona(1.0, 1.0), spoof(-1.0, 1.0);
  eval::LabeledScores trials;
  for (std::int64_t i = 0; i < state.range(0); ++i) {
    const bool b = i % 10 == 0;
    trials.push_back({"u" + std::to_string(i), b ? bona(rng) : spoof(rng),
                      b ? Key::kBonafide : Key::kSpoof, std::nullopt,
                      b ? std::nullopt : std::optional<std::string>("A01")});
  }
  for (auto _ : state) benchmark::DoNotOptimize(eval::ComputeEer(trials));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ComputeEer)->Arg(1000)->Arg(100000)->Unit(benchmark::kMillisecond);

void BM_ComputeMinTdcf(benchmark::State& state) {
  Rng rng(14);
  std::normal_distribution<double> bona(1.0, 1.0), spoof(-1.0, 1.0);
  eval::LabeledScores trials;
  for (std::int64_t i = 0; i < state.range(0); ++i) {
    const bool b = i % 10 == 0;
    trials.push_back({"u" + std::to_string(i), b ? bona(rng) : spoof(rng),
                      b ? Key::kBonafide : Key::kSpoof, std::nullopt,
                      b ? std::nullopt : std::optional<std::string>("A01")});
  }
  const eval::TdcfParams params;
  for (auto _ : state) benchmark::DoNotOptimize(eval::ComputeMinTdcf(trials, params));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ComputeMinTdcf)->Arg(100000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
