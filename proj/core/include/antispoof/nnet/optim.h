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
#include <vector>

#include "antispoof/nnet/tensor.h"

namespace antispoof::nnet {

enum class OptimizerKind { kRmsprop, kAdam };

const char* ToString(OptimizerKind kind);
OptimizerKind ParseOptimizerKind(const std::string& text);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double learning_rate = 1e-4;
  // rmsprop
  double rho = 0.95;
  double rms_eps = 1e-7;
  // adam
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
};

// RMSprop:  acc <- rho acc + (1 - rho) g^2;  p <- p - lr g / (sqrt(acc) + eps)
// Adam:     bias-corrected first and second moments.
// Gradients are zeroed after every step.
template <typename T>
class Optimizer {
 public:
  // Every trainable parameter must appear exactly once.
  Optimizer(OptimizerConfig config, std::vector<Parameter<T>*> params);

  void Step();

  double learning_rate() const { return config_.learning_rate; }
  void set_learning_rate(double lr) { config_.learning_rate = lr; }
  const OptimizerConfig& config() const { return config_; }
  std::size_t steps() const { return steps_; }

 private:
  OptimizerConfig config_;
  std::vector<Parameter<T>*> params_;
  std::vector<std::vector<T>> first_;
  std::vector<std::vector<T>> second_;
  std::size_t steps_ = 0;
};

}  // namespace antispoof::nnet
