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

// Finite-difference harness shared by the unit and acceptance suites: a layer
// is checked through the scalar loss sum(r * layer(x)) for a fixed random r.

#include <functional>
#include <random>
#include <vector>

#include "antispoof/nnet/grad_check.h"
#include "antispoof/nnet/layers.h"
#include "antispoof/nnet/network.h"

namespace testing_support {

using antispoof::Rng;
using antispoof::nnet::GradCheckOptions;
using antispoof::nnet::GradCheckReport;
using antispoof::nnet::GradCheckTarget;
using antispoof::nnet::Layer;
using antispoof::nnet::Mode;
using antispoof::nnet::Shape;
using antispoof::nnet::Tensor;

inline Tensor<double> RandomTensor(const Shape& shape, Rng& rng, double scale = 1.0) {
  Tensor<double> t(shape);
  std::normal_distribution<double> g(0.0, scale);
  for (double& v : t.values()) v = g(rng);
  return t;
}

inline double Dot(const Tensor<double>& a, const Tensor<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Runs the layer in training mode. `before_forward` runs ahead of every
// forward pass (dropout reseeds its generator there).
inline GradCheckReport CheckLayerGradients(Layer<double>& layer, Tensor<double> x, Rng& rng,
                                           const std::function<void()>& before_forward = {},
                                           const GradCheckOptions& options = {}) {
  auto forward = [&] {
    if (before_forward) before_forward();
    return layer.Train(x);
  };
  const Tensor<double> r = RandomTensor(forward().shape(), rng);
  for (auto* p : layer.Params()) p->ZeroGrad();
  forward();
  const Tensor<double> dx = layer.Backward(r);

  std::vector<GradCheckTarget> targets;
  if (layer.input_grad()) targets.push_back({"input", x.values(), dx.values()});
  for (auto* p : layer.Params())
    if (p->trainable) targets.push_back({p->name, p->value.values(), p->grad.values()});
  return antispoof::nnet::GradCheck([&] { return Dot(r, forward()); }, targets, options);
}

// Same check through a whole network.
inline GradCheckReport CheckNetworkGradients(antispoof::nnet::Network<double>& net,
                                             Tensor<double> x, Rng& rng,
                                             const GradCheckOptions& options = {}) {
  const Tensor<double> r = RandomTensor(net.Forward(x, Mode::kTrain).shape(), rng);
  net.ZeroGrad();
  net.Forward(x, Mode::kTrain);
  net.Backward(r);
  std::vector<GradCheckTarget> targets;
  for (auto* p : net.TrainableParams())
    targets.push_back({p->name, p->value.values(), p->grad.values()});
  return antispoof::nnet::GradCheck([&] { return Dot(r, net.Forward(x, Mode::kTrain)); },
                                    targets, options);
}

}  // namespace testing_support
