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

#include <cmath>

#include "antispoof/models.h"
#include "architecture_check.h"
#include "doctest.h"
#include "layer_grad.h"

using namespace antispoof;
using namespace antispoof::models;
using testing_support::CompareWithTable;

namespace {

std::string Join(const std::vector<std::string>& lines) {
  std::string s;
  for (const auto& l : lines) s += l + "\n";
  return s;
}

}  // namespace

TEST_CASE("VGG reproduces the reference layer table") {
  Rng rng(1);
  ModelSpec spec;
  spec.kind = ModelKind::kVgg;
  auto model = BuildVgg<float>(spec, rng);
  const auto diff = CompareWithTable(model, testing_support::VggTable());
  INFO(Join(diff.shape_errors), Join(diff.param_errors));
  CHECK(diff.shape_errors.empty());
  CHECK(diff.param_errors.empty());
  CHECK(model.CountParams() == testing_support::kVggTotalParams);
}

TEST_CASE("LCNN reproduces the reference layer table") {
  Rng rng(1);
  ModelSpec spec;
  spec.kind = ModelKind::kLcnn;
  auto model = BuildLcnn<float>(spec, rng);
  const auto diff = CompareWithTable(model, testing_support::LcnnTable());
  INFO(Join(diff.shape_errors), Join(diff.param_errors));
  CHECK(diff.shape_errors.empty());
  CHECK(diff.param_errors.empty());
  CHECK(model.CountParams() == testing_support::kLcnnTotalParams);
}

TEST_CASE("single-channel inputs change only the first convolution") {
  Rng rng(1);
  ModelSpec spec;
  spec.input_channels = 1;
  CHECK(BuildVgg<float>(spec, rng).CountParams() == testing_support::kVggTotalParams - 9 * 32);
  spec.kind = ModelKind::kLcnn;
  CHECK(BuildLcnn<float>(spec, rng).CountParams() == testing_support::kLcnnTotalParams - 25 * 32);
}

TEST_CASE("CNNs accept any even number of frames") {
  Rng rng(2);
  ModelSpec spec;
  spec.width_multiplier = 0.0625;
  spec.input_bins = 64;
  for (auto kind : {ModelKind::kVgg, ModelKind::kLcnn}) {
    spec.kind = kind;
    auto model = BuildModel<float>(spec, rng, nullptr);
    for (std::size_t frames : {2, 7, 100, 251}) {
      const auto y = model.InferLogits(nnet::Tensor<float>({3, 64, frames, 2}, 0.1f));
      CHECK(y.shape() == nnet::Shape{3, 2});
    }
    CHECK_THROWS_AS(model.InferLogits(nnet::Tensor<float>({1, 64, 1, 2})), ShapeError);
    CHECK_THROWS_AS(model.InferLogits(nnet::Tensor<float>({1, 32, 4, 2})), ShapeError);
  }
}

TEST_CASE("width multiplier scales widths to even channel counts") {
  ModelSpec spec;
  spec.width_multiplier = 0.125;
  CHECK(spec.Width(32) == 4);
  CHECK(spec.Width(512) == 64);
  spec.width_multiplier = 0.1;
  CHECK(spec.Width(32) == 4);  // 3.2 -> 3 -> 4
  spec.width_multiplier = 0.01;
  CHECK(spec.Width(32) == 2);
  spec.width_multiplier = 0.0;
  CHECK_THROWS_AS(spec.Validate(), ConfigError);
  spec.width_multiplier = 1.5;
  CHECK_THROWS_AS(spec.Validate(), ConfigError);
  spec = {};
  spec.input_bins = 100;
  CHECK_THROWS_AS(spec.Validate(), ConfigError);
  spec = {};
  spec.input_channels = 3;
  CHECK_THROWS_AS(spec.Validate(), ConfigError);
}

TEST_CASE("SincNet structure") {
  Rng rng(3), drop(4);
  ModelSpec spec;
  spec.kind = ModelKind::kSincNet;
  spec.width_multiplier = 1.0 / 16;
  auto model = BuildSincNet<float>(spec, rng, &drop);
  const auto trace = model.net().ShapeTrace({2, 3200});
  CHECK(trace.front().first == "SincConv");
  CHECK(trace.front().second == nnet::Shape{2, 2950, 80});
  CHECK(trace.back().second == nnet::Shape{2, 2});
  auto& sinc = dynamic_cast<nnet::SincConv1d<float>&>(model.net().layer(0));
  CHECK(sinc.filters() == kSincFilters);
  CHECK(sinc.length() == kSincLength);
  // Mel initialization: increasing bands covering 30..7970 Hz.
  const auto first = sinc.Band(0), last = sinc.Band(79);
  CHECK(first.low * 16000 == doctest::Approx(30.0).epsilon(1e-4));
  CHECK(last.high * 16000 == doctest::Approx(7970.0).epsilon(1e-4));
  for (std::size_t k = 0; k + 1 < 80; ++k) CHECK(sinc.Band(k).high == doctest::Approx(sinc.Band(k + 1).low));

  // Output rows are log-probabilities.
  nnet::Tensor<float> x({2, 3200});
  std::normal_distribution<float> g(0, 1);
  for (float& v : x.values()) v = g(rng);
  const auto y = model.InferLogits(x);
  for (std::size_t b = 0; b < 2; ++b)
    CHECK(std::exp(y[2 * b]) + std::exp(y[2 * b + 1]) == doctest::Approx(1.0).epsilon(1e-5));
  CHECK_THROWS_AS(model.InferLogits(nnet::Tensor<float>({2, 3000})), ShapeError);
}

TEST_CASE("SincNet dropout profiles") {
  CHECK(DropoutRate(DropoutProfile::kStandard) == 0.5);
  CHECK(DropoutRate(DropoutProfile::kHigh) == 0.7);
  CHECK(ParseDropoutProfile("high") == DropoutProfile::kHigh);
  CHECK_THROWS_AS(ParseDropoutProfile("medium"), ConfigError);
  CHECK(ParseModelKind("sincnet") == ModelKind::kSincNet);
  CHECK_THROWS_AS(ParseModelKind("resnet"), ConfigError);
}

TEST_CASE("mel band edges") {
  const auto bands = MelSincBands(80, 30.0, 7970.0);
  REQUIRE(bands.size() == 80);
  CHECK(bands.front().first == doctest::Approx(30.0));
  CHECK(bands.back().second == doctest::Approx(7970.0));
  auto mel = [](double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); };
  const double step = (mel(7970.0) - mel(30.0)) / 80;
  for (const auto& [lo, hi] : bands) CHECK(mel(hi) - mel(lo) == doctest::Approx(step));
}

TEST_CASE("whole small models pass a finite-difference check") {
  Rng rng(5);
  ModelSpec spec;
  spec.width_multiplier = 0.0625;
  spec.input_bins = 64;
  for (auto kind : {ModelKind::kVgg, ModelKind::kLcnn}) {
    spec.kind = kind;
    auto model = BuildModel<double>(spec, rng, nullptr);
    nnet::GradCheckOptions options;
    options.max_coordinates = 40;
    const auto report = testing_support::CheckNetworkGradients(
        model.net(), testing_support::RandomTensor({2, 64, 4, 2}, rng), rng, options);
    INFO(report.ToString());
    CHECK(report.MaxError() < 1e-5);
  }
}

TEST_CASE("CNN logits do not depend on the order of pooled time frames") {
  // Everything after the last convolution block sees time only through the
  // temporal mean, so permuting time columns at the pooling input leaves
  // the logits unchanged.
  Rng rng(6);
  ModelSpec spec;
  spec.width_multiplier = 0.0625;
  spec.input_bins = 64;
  auto model = BuildVgg<double>(spec, rng);
  auto& net = model.net();
  std::size_t mean_at = 0;
  for (std::size_t i = 0; i < net.size(); ++i)
    if (net.layer(i).type() == "temporal_mean_pool") mean_at = i;
  REQUIRE(mean_at > 0);
  const auto x = testing_support::RandomTensor({1, 64, 12, 2}, rng);
  const auto h = net.InferRange(x, 0, mean_at);  // [1, F, T, C]
  auto permuted = h;
  const std::size_t F = h.dim(1), T = h.dim(2), C = h.dim(3);
  for (std::size_t f = 0; f < F; ++f)
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t c = 0; c < C; ++c)
        permuted[(f * T + t) * C + c] = h[(f * T + (T - 1 - t)) * C + c];
  const auto a = net.InferRange(h, mean_at, net.size());
  const auto b = net.InferRange(permuted, mean_at, net.size());
  CHECK(a[0] == doctest::Approx(b[0]).epsilon(1e-12));
  CHECK(a[1] == doctest::Approx(b[1]).epsilon(1e-12));
}
