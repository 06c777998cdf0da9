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

// Random score sets for the metric property checks.

#include <random>
#include <vector>

#include "antispoof/eval.h"

namespace testing_support {

struct ScoreSplit {
  std::vector<double> bonafide, spoof;
};

// Scores drawn from two overlapping Gaussians, optionally rounded to a
// coarse grid so that ties occur.
inline ScoreSplit RandomScores(antispoof::Rng& rng, std::size_t max_n) {
  std::uniform_int_distribution<std::size_t> count(1, max_n / 2);
  std::bernoulli_distribution coarse(0.3);
  std::normal_distribution<double> bona(1.0, 1.0), spoof(-0.5, 1.2);
  const bool round = coarse(rng);
  auto draw = [&](std::normal_distribution<double>& d) {
    double v = d(rng);
    return round ? std::round(v * 4.0) / 4.0 : v;
  };
  ScoreSplit s;
  const std::size_t nb = count(rng), ns = count(rng);
  for (std::size_t i = 0; i < nb; ++i) s.bonafide.push_back(draw(bona));
  for (std::size_t i = 0; i < ns; ++i) s.spoof.push_back(draw(spoof));
  return s;
}

inline antispoof::eval::LabeledScores Label(const ScoreSplit& s) {
  antispoof::eval::LabeledScores out;
  std::size_t id = 0;
  for (double v : s.bonafide)
    out.push_back({"b" + std::to_string(id++), v, antispoof::Key::kBonafide, {}, {}});
  for (double v : s.spoof)
    out.push_back({"s" + std::to_string(id++), v, antispoof::Key::kSpoof, {}, {"A01"}});
  return out;
}

}  // namespace testing_support
