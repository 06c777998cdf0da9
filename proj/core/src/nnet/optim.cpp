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

#include "antispoof/nnet/optim.h"

#include <cmath>
#include <set>

namespace antispoof::nnet {

const char* ToString(OptimizerKind kind) {
  return kind == OptimizerKind::kAdam ? "adam" : "rmsprop";
}

OptimizerKind ParseOptimizerKind(const std::string& text) {
  if (text == "adam") return OptimizerKind::kAdam;
  if (text == "rmsprop") return OptimizerKind::kRmsprop;
  throw ConfigError("unknown optimizer '" + text + "' (expected adam or rmsprop)");
}

template <typename T>
Optimizer<T>::Optimizer(OptimizerConfig config, std::vector<Parameter<T>*> params)
    : config_(config), params_(std::move(params)) {
  if (!(config_.learning_rate >= 0.0))
    throw ConfigError("learning rate must be non-negative");
  std::set<const Parameter<T>*> seen;
  for (const Parameter<T>* p : params_) {
    if (!p->trainable)
      throw Error("parameter " + p->name + " is not trainable");
    if (!seen.insert(p).second)
      throw Error("parameter " + p->name + " registered twice with an optimizer");
    first_.emplace_back(p->value.size(), T(0));
    second_.emplace_back(config_.kind == OptimizerKind::kAdam ? p->value.size() : 0,
                         T(0));
  }
}

template <typename T>
void Optimizer<T>::Step() {
  bool any = false;
  for (const Parameter<T>* p : params_) any = any || p->has_grad;
  if (!any) throw Error("optimizer step without any gradient");
  ++steps_;
  const double lr = config_.learning_rate;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Parameter<T>& p = *params_[k];
    if (!p.has_grad) continue;
    std::vector<T>& m = first_[k];
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      if (config_.kind == OptimizerKind::kRmsprop) {
        const double acc = config_.rho * m[i] + (1.0 - config_.rho) * g * g;
        m[i] = static_cast<T>(acc);
        p.value[i] -= static_cast<T>(lr * g / (std::sqrt(acc) + config_.rms_eps));
      } else {
        std::vector<T>& v = second_[k];
        const double mi = config_.beta1 * m[i] + (1.0 - config_.beta1) * g;
        const double vi = config_.beta2 * v[i] + (1.0 - config_.beta2) * g * g;
        m[i] = static_cast<T>(mi);
        v[i] = static_cast<T>(vi);
        p.value[i] -= static_cast<T>(lr * (mi / c1) /
                                     (std::sqrt(vi / c2) + config_.adam_eps));
      }
    }
    p.ZeroGrad();
  }
}

template class Optimizer<float>;
template class Optimizer<double>;

}  // namespace antispoof::nnet
