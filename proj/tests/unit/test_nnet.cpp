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
#include <numbers>

#include "antispoof/dataio.h"
#include "antispoof/nnet/grad_check.h"
#include "antispoof/nnet/layers.h"
#include "antispoof/nnet/network.h"
#include "antispoof/nnet/optim.h"
#include "doctest.h"
#include "layer_grad.h"
#include "oracles.h"
#include "temp_dir.h"

using namespace antispoof;
using namespace antispoof::nnet;
using testing_support::CheckLayerGradients;
using testing_support::RandomTensor;

namespace {

constexpr double kGradTolerance = 1e-5;

void RandomizeParams(Layer<double>& layer, Rng& rng, double scale = 0.5) {
  std::normal_distribution<double> g(0.0, scale);
  for (auto* p : layer.Params())
    if (p->trainable)
      for (double& v : p->value.values()) v = g(rng);
}

void ExpectSmoothPass(const GradCheckReport& report) {
  INFO(report.ToString());
  CHECK(report.MaxError() < kGradTolerance);
  for (const auto& e : report.entries) {
    CHECK(e.checked > 0);
    CHECK(e.excluded == 0);
  }
}

}  // namespace

TEST_CASE("gradient checker agrees with a hand-rolled central difference") {
  std::vector<double> x{0.3, -1.2, 2.0};
  auto f = [&] { return std::sin(x[0]) * x[1] * x[1] + std::exp(0.5 * x[2]); };
  std::vector<double> analytic{std::cos(x[0]) * x[1] * x[1], 2 * std::sin(x[0]) * x[1],
                               0.5 * std::exp(0.5 * x[2])};
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(oracle::CentralDifference(f, x, i, 1e-6) == doctest::Approx(analytic[i]).epsilon(1e-8));
  const GradCheckTarget target{"x", x, analytic};
  CHECK(GradCheck(f, {&target, 1}).MaxError() < 1e-8);

  // A wrong gradient is caught.
  std::vector<double> wrong = analytic;
  wrong[1] *= 1.01;
  const GradCheckTarget bad{"x", x, wrong};
  CHECK(GradCheck(f, {&bad, 1}).MaxError() > 1e-3);
}

TEST_CASE("gradient checker excludes kinks") {
  std::vector<double> x{0.0, 1.0};
  auto f = [&] { return std::abs(x[0]) + x[1]; };
  std::vector<double> analytic{0.0, 1.0};
  const GradCheckTarget target{"x", x, analytic};
  const auto report = GradCheck(f, {&target, 1});
  CHECK(report.entries[0].excluded == 1);
  CHECK(report.entries[0].checked == 1);
}

TEST_CASE("conv2d gradients") {
  Rng rng(1);
  for (auto [kf, kt] : {std::pair<std::size_t, std::size_t>{3, 3}, {1, 1}, {5, 5}, {3, 1}}) {
    Conv2d<double> conv("conv", 3, 4, kf, kt);
    RandomizeParams(conv, rng);
    ExpectSmoothPass(CheckLayerGradients(conv, RandomTensor({2, 6, 5, 3}, rng), rng));
  }
}

TEST_CASE("conv2d matches a direct same-padded cross-correlation") {
  Rng rng(2);
  Conv2d<double> conv("conv", 2, 3, 3, 5);
  RandomizeParams(conv, rng);
  const auto x = RandomTensor({1, 4, 6, 2}, rng);
  const auto y = conv.Infer(x);
  REQUIRE(y.shape() == Shape{1, 4, 6, 3});
  const auto& w = conv.weight().value;
  for (std::size_t f = 0; f < 4; ++f)
    for (std::size_t t = 0; t < 6; ++t)
      for (std::size_t o = 0; o < 3; ++o) {
        double acc = conv.bias().value[o];
        for (std::size_t i = 0; i < 3; ++i)
          for (std::size_t j = 0; j < 5; ++j)
            for (std::size_t c = 0; c < 2; ++c) {
              const long ff = static_cast<long>(f + i) - 1, tt = static_cast<long>(t + j) - 2;
              if (ff < 0 || ff >= 4 || tt < 0 || tt >= 6) continue;
              acc += x[((ff * 6) + tt) * 2 + c] * w[((i * 5 + j) * 2 + c) * 3 + o];
            }
        CHECK(y[(f * 6 + t) * 3 + o] == doctest::Approx(acc).epsilon(1e-12));
      }
}

TEST_CASE("max pooling gradients and values") {
  Rng rng(3);
  MaxPool2d<double> pool("pool", 2, 1);
  ExpectSmoothPass(CheckLayerGradients(pool, RandomTensor({2, 8, 3, 4}, rng), rng));
  MaxPool2d<double> square("pool", 2, 2);
  ExpectSmoothPass(CheckLayerGradients(square, RandomTensor({1, 4, 4, 2}, rng), rng));

  Tensor<double> x({1, 2, 2, 1}, std::vector<double>{1, 5, 5, 2});
  MaxPool2d<double> p("p", 2, 2);
  CHECK(p.Train(x)[0] == 5);
  const auto dx = p.Backward(Tensor<double>({1, 1, 1, 1}, 1.0));
  // Ties go to the first element in window order.
  CHECK(dx.values()[1] == 1.0);
  CHECK(dx.values()[2] == 0.0);
  CHECK_THROWS_AS(p.OutputShape({1, 3, 2, 1}), ShapeError);
}

TEST_CASE("max feature map gradients and values") {
  Rng rng(4);
  Mfm<double> mfm("mfm");
  ExpectSmoothPass(CheckLayerGradients(mfm, RandomTensor({2, 3, 4, 4}, rng), rng));
  Tensor<double> x({1, 1, 1, 4}, std::vector<double>{1, 3, 4, -2});
  const auto y = mfm.Infer(x);
  CHECK(y.shape() == Shape{1, 1, 1, 2});
  CHECK(y[0] == 3);
  CHECK(y[1] == 4);
  CHECK_THROWS_AS(mfm.OutputShape({1, 1, 1, 3}), ShapeError);
}

TEST_CASE("temporal mean pooling gradients and values") {
  Rng rng(5);
  TemporalMeanPool<double> pool("mean");
  ExpectSmoothPass(CheckLayerGradients(pool, RandomTensor({2, 3, 5, 4}, rng), rng));
  Tensor<double> x({1, 1, 4, 1}, std::vector<double>{1, 2, 3, 6});
  CHECK(pool.Infer(x)[0] == 3.0);
  CHECK(pool.OutputShape({2, 3, 5, 4}) == Shape{2, 3, 4});
}

TEST_CASE("time trim drops trailing frames and routes gradients") {
  Rng rng(6);
  TimeTrim<double> trim("trim", 2);
  CHECK(trim.OutputShape({1, 4, 25, 3}) == Shape{1, 4, 24, 3});
  ExpectSmoothPass(CheckLayerGradients(trim, RandomTensor({2, 2, 5, 2}, rng), rng));
}

TEST_CASE("flatten, dense and activations") {
  Rng rng(7);
  Flatten<double> flat("flat");
  ExpectSmoothPass(CheckLayerGradients(flat, RandomTensor({3, 2, 2, 2}, rng), rng));
  Dense<double> dense("dense", 8, 5);
  RandomizeParams(dense, rng);
  ExpectSmoothPass(CheckLayerGradients(dense, RandomTensor({4, 8}, rng), rng));
  LeakyRelu<double> relu("relu", 0.0);
  CHECK(relu.type() == "relu");
  ExpectSmoothPass(CheckLayerGradients(relu, RandomTensor({4, 8}, rng), rng));
  LeakyRelu<double> leaky("leaky", 0.2);
  ExpectSmoothPass(CheckLayerGradients(leaky, RandomTensor({4, 8}, rng), rng));
  Abs<double> abs("abs");
  ExpectSmoothPass(CheckLayerGradients(abs, RandomTensor({4, 8}, rng), rng));
}

TEST_CASE("dropout gradients under a fixed mask") {
  Rng rng(8);
  Rng mask_rng;
  Dropout<double> drop("drop", 0.5, &mask_rng);
  ExpectSmoothPass(
      CheckLayerGradients(drop, RandomTensor({4, 8}, rng), rng, [&] { mask_rng.seed(99); }));
}

TEST_CASE("dropout scales survivors and is identity at inference") {
  Rng mask_rng(1);
  Dropout<double> drop("drop", 0.7, &mask_rng);
  Tensor<double> x({1, 10000}, 1.0);
  const auto y = drop.Train(x);
  std::size_t kept = 0;
  for (double v : y.values()) {
    CHECK((v == 0.0 || v == doctest::Approx(1.0 / 0.3)));
    kept += v != 0.0;
  }
  CHECK(kept > 2700);
  CHECK(kept < 3300);
  CHECK(drop.Infer(x) == x);
  Dropout<double> none("none", 0.0, nullptr);
  CHECK_THROWS_AS(Dropout<double>("bad", 1.0, &mask_rng), ConfigError);
  Dropout<double> no_rng("no_rng", 0.5, nullptr);
  CHECK_THROWS_AS(no_rng.Train(x), Error);
}

TEST_CASE("batch norm gradients and statistics") {
  Rng rng(9);
  BatchNorm<double> bn("bn", 5);
  RandomizeParams(bn, rng);
  ExpectSmoothPass(CheckLayerGradients(bn, RandomTensor({6, 5}, rng), rng));

  BatchNorm<double> fresh("bn", 2, 0.9);
  Tensor<double> x({4, 2}, std::vector<double>{1, 10, 2, 20, 3, 30, 4, 40});
  const auto y = fresh.Train(x);
  // Unit gamma, zero beta: columns standardized with the biased variance.
  double m = 0, v = 0;
  for (int i = 0; i < 4; ++i) m += y[i * 2];
  for (int i = 0; i < 4; ++i) v += y[i * 2] * y[i * 2];
  CHECK(m == doctest::Approx(0.0));
  CHECK(v / 4 == doctest::Approx(1.25 / (1.25 + 1e-5)));
  // Running mean moves 10% of the way from 0 to the batch mean.
  CHECK(fresh.running_mean().value[0] == doctest::Approx(0.25));
  CHECK(fresh.running_var().value[0] == doctest::Approx(0.9 + 0.1 * 1.25));
  CHECK_FALSE(fresh.running_mean().trainable);
  CHECK_THROWS_AS(fresh.Train(Tensor<double>({1, 2}, 1.0)), ShapeError);
}

TEST_CASE("layer norm gradients") {
  Rng rng(10);
  LayerNorm<double> ln("ln", 4);
  RandomizeParams(ln, rng);
  ExpectSmoothPass(CheckLayerGradients(ln, RandomTensor({3, 5, 4}, rng), rng));
}

TEST_CASE("conv1d and 1-D pooling gradients") {
  Rng rng(11);
  Conv1d<double> conv("conv", 3, 4, 3);
  RandomizeParams(conv, rng);
  ExpectSmoothPass(CheckLayerGradients(conv, RandomTensor({2, 8, 3}, rng), rng));
  CHECK(conv.OutputShape({2, 8, 3}) == Shape{2, 6, 4});
  MaxPool1d<double> pool("pool", 3);
  CHECK(pool.OutputShape({2, 8, 4}) == Shape{2, 2, 4});
  ExpectSmoothPass(CheckLayerGradients(pool, RandomTensor({2, 8, 4}, rng), rng));
}

TEST_CASE("sinc convolution gradients reach the raw cutoffs") {
  Rng rng(12);
  SincConv1d<double> sinc("sinc", 4, 7);
  for (std::size_t k = 0; k < 4; ++k) {
    sinc.cutoffs().value[2 * k] = 0.03 + 0.08 * k;
    sinc.cutoffs().value[2 * k + 1] = 0.03 + 0.08 * k + 0.05;
  }
  sinc.set_input_grad(true);
  ExpectSmoothPass(CheckLayerGradients(sinc, RandomTensor({2, 8}, rng), rng));
}

TEST_CASE("sinc taps follow the band-pass formula") {
  SincConv1d<double> sinc("sinc", 1, 5);
  sinc.cutoffs().value[0] = 0.1;
  sinc.cutoffs().value[1] = 0.3;  // high = 0.1 + |0.3 - 0.1|
  const SincBand band = sinc.Band(0);
  CHECK(band.low == doctest::Approx(0.1));
  CHECK(band.high == doctest::Approx(0.3));
  const auto taps = sinc.Taps();
  const auto w = oracle::Hamming(5);
  for (int i = 0; i < 5; ++i) {
    const double n = i - 2;
    const double ideal = n == 0 ? 2 * (0.3 - 0.1)
                                : (std::sin(2 * std::numbers::pi * 0.3 * n) -
                                   std::sin(2 * std::numbers::pi * 0.1 * n)) /
                                      (std::numbers::pi * n);
    CHECK(taps[i] == doctest::Approx(ideal * w[i]).epsilon(1e-12));
  }
}

TEST_CASE("sinc bands stay ordered inside (0, 0.5]") {
  SincConv1d<double> sinc("sinc", 3, 5);
  const double raw[3][2] = {{-0.2, -0.9}, {0.0, 0.0}, {0.7, 0.1}};
  for (int k = 0; k < 3; ++k) {
    sinc.cutoffs().value[2 * k] = raw[k][0];
    sinc.cutoffs().value[2 * k + 1] = raw[k][1];
    const SincBand b = sinc.Band(k);
    CHECK(b.low > 0.0);
    CHECK(b.low <= b.high);
    CHECK(b.high <= 0.5);
  }
  CHECK_THROWS_AS(SincConv1d<double>("even", 2, 4), ShapeError);
}

TEST_CASE("log-softmax and softmax cross-entropy gradients") {
  Rng rng(13);
  LogSoftmax<double> ls("ls");
  ExpectSmoothPass(CheckLayerGradients(ls, RandomTensor({4, 3}, rng), rng));

  Tensor<double> logits = RandomTensor({5, 2}, rng);
  const std::vector<int> labels{0, 1, 1, 0, 1};
  Tensor<double> grad;
  SoftmaxCrossEntropy<double>(logits, labels, &grad);
  const GradCheckTarget target{"logits", logits.values(), grad.values()};
  const auto report = GradCheck(
      [&] { return SoftmaxCrossEntropy<double>(logits, labels, nullptr); }, {&target, 1});
  ExpectSmoothPass(report);
}

TEST_CASE("softmax cross-entropy value") {
  Tensor<double> logits({2, 2}, std::vector<double>{0, 0, 2, 0});
  const std::vector<int> labels{0, 1};
  const double expected = (std::log(2.0) + std::log(1 + std::exp(2.0))) / 2;
  CHECK(SoftmaxCrossEntropy<double>(logits, labels, nullptr) == doctest::Approx(expected));
  const std::vector<int> bad{0, 2};
  CHECK_THROWS_AS(SoftmaxCrossEntropy<double>(logits, bad, nullptr), ShapeError);
  const auto lp = LogSoftmaxRows(logits);
  CHECK(std::exp(lp[2]) + std::exp(lp[3]) == doctest::Approx(1.0));
}

TEST_CASE("network chains layers and backpropagates") {
  Rng rng(14);
  Network<double> net;
  net.Add<Conv2d<double>>("c1", 2, 4, 3, 3);
  net.Add<Mfm<double>>("m1");
  net.Add<MaxPool2d<double>>("p1", 2, 1);
  net.Add<TemporalMeanPool<double>>("mean");
  net.Add<Flatten<double>>("flat");
  net.Add<Dense<double>>("d1", 4, 3);
  net.Add<LeakyRelu<double>>("r1", 0.0);
  net.Add<Dense<double>>("d2", 3, 2);
  for (auto* p : net.TrainableParams()) {
    std::normal_distribution<double> g(0.0, 0.5);
    for (double& v : p->value.values()) v = g(rng);
  }
  CHECK_FALSE(net.layer(0).input_grad());
  const auto trace = net.ShapeTrace({3, 4, 5, 2});
  CHECK(trace.back().second == Shape{3, 2});
  CHECK(trace[2].second == Shape{3, 2, 5, 2});
  const auto report = testing_support::CheckNetworkGradients(net, RandomTensor({3, 4, 5, 2}, rng), rng);
  INFO(report.ToString());
  CHECK(report.MaxError() < kGradTolerance);
  CHECK(CountTrainable(net.TrainableParams()) == (3 * 3 * 2 * 4 + 4) + (4 * 3 + 3) + (3 * 2 + 2));
}

TEST_CASE("checkpoint round trip and validation") {
  Rng rng(15);
  testing_support::TempDir dir;
  auto make = [] {
    Network<float> net;
    net.Add<Dense<float>>("d1", 3, 2);
    net.Add<BatchNorm<float>>("bn", 2);
    return net;
  };
  Network<float> a = make();
  for (auto* p : a.Params())
    for (float& v : p->value.values()) v = std::normal_distribution<float>(0, 1)(rng);
  SaveCheckpoint(a, dir / "a.ckpt");
  Network<float> b = make();
  LoadCheckpoint(b, dir / "a.ckpt");
  for (std::size_t i = 0; i < a.Params().size(); ++i)
    CHECK(a.Params()[i]->value == b.Params()[i]->value);

  const std::string bytes = dataio::ReadFile(dir / "a.ckpt");
  CHECK(bytes.substr(0, 4) == "ANNM");
  CHECK_THROWS_AS(DecodeCheckpoint<float>("XXXX" + bytes.substr(4), b.Params()), FormatError);
  CHECK_THROWS_AS(DecodeCheckpoint<float>(bytes.substr(0, bytes.size() - 3), b.Params()),
                  FormatError);
  Network<float> other;
  other.Add<Dense<float>>("d1", 4, 2);
  other.Add<BatchNorm<float>>("bn", 2);
  CHECK_THROWS_AS(DecodeCheckpoint<float>(bytes, other.Params()), FormatError);
  Network<float> renamed;
  renamed.Add<Dense<float>>("dense", 3, 2);
  CHECK_THROWS_AS(DecodeCheckpoint<float>(bytes, renamed.Params()), FormatError);
}

TEST_CASE("optimizers follow their update rules") {
  Parameter<double> p("p", {2});
  p.value[0] = 1.0;
  p.value[1] = -1.0;
  SUBCASE("rmsprop") {
    Optimizer<double> opt({OptimizerKind::kRmsprop, 0.1}, {&p});
    p.grad[0] = 2.0;
    p.grad[1] = 0.0;
    p.has_grad = true;
    opt.Step();
    const double acc = 0.05 * 4.0;
    CHECK(p.value[0] == doctest::Approx(1.0 - 0.1 * 2.0 / (std::sqrt(acc) + 1e-7)));
    CHECK(p.value[1] == -1.0);
    CHECK(p.grad[0] == 0.0);
    CHECK_FALSE(p.has_grad);
  }
  SUBCASE("adam first step moves by lr in the gradient sign") {
    Optimizer<double> opt({OptimizerKind::kAdam, 0.01}, {&p});
    p.grad[0] = 3.0;
    p.grad[1] = -0.5;
    p.has_grad = true;
    opt.Step();
    CHECK(p.value[0] == doctest::Approx(1.0 - 0.01).epsilon(1e-6));
    CHECK(p.value[1] == doctest::Approx(-1.0 + 0.01).epsilon(1e-6));
    CHECK(opt.steps() == 1);
  }
  SUBCASE("zero learning rate leaves parameters unchanged") {
    Optimizer<double> opt({OptimizerKind::kAdam, 0.0}, {&p});
    p.grad[0] = 3.0;
    p.has_grad = true;
    opt.Step();
    CHECK(p.value[0] == 1.0);
  }
  SUBCASE("a step without gradients is an error") {
    Optimizer<double> opt({OptimizerKind::kAdam, 0.01}, {&p});
    CHECK_THROWS_AS(opt.Step(), Error);
  }
}

TEST_CASE("optimizer rejects duplicates, frozen tensors and bad names") {
  Parameter<double> p("p", {1});
  Parameter<double> frozen("f", {1}, false);
  CHECK_THROWS(Optimizer<double>({}, {&p, &p}));
  CHECK_THROWS(Optimizer<double>({}, {&frozen}));
  CHECK_THROWS_AS(Optimizer<double>({OptimizerKind::kAdam, -1.0}, {&p}), ConfigError);
  CHECK(ParseOptimizerKind("rmsprop") == OptimizerKind::kRmsprop);
  CHECK_THROWS_AS(ParseOptimizerKind("sgd"), ConfigError);
}

TEST_CASE("adam minimizes a quadratic") {
  Parameter<double> p("p", {1});
  p.value[0] = 5.0;
  Optimizer<double> opt({OptimizerKind::kAdam, 0.1}, {&p});
  for (int i = 0; i < 500; ++i) {
    p.grad[0] = 2 * (p.value[0] - 2.0);
    p.has_grad = true;
    opt.Step();
  }
  CHECK(p.value[0] == doctest::Approx(2.0).epsilon(1e-2));
}
