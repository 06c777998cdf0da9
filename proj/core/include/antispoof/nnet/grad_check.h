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

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace antispoof::nnet {

// A buffer to perturb and the analytic gradient computed for it.
struct GradCheckTarget {
  std::string name;
  std::span<double> values;
  std::span<const double> analytic;
};

struct GradCheckEntry {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  // Coordinates sitting on a kink (max/abs ties, ReLU at 0), where the one
  // sided difference quotients disagree.
  std::size_t excluded = 0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;

  double MaxError() const;
  std::string ToString() const;
};

struct GradCheckOptions {
  // Step is step * max(1, |x|).
  double step = 1e-5;
  // Relative-error denominator floor, so exact zeros compare as equal.
  double denominator_floor = 1e-6;
  // One-sided quotients differing by more than this (relative) mark a kink.
  double kink_tolerance = 1e-3;
  // Check at most this many coordinates per target, evenly strided. 0 = all.
  std::size_t max_coordinates = 0;
};

// Central finite differences of `loss` against the supplied analytic
// gradients. `loss` must be a deterministic function of the target buffers.
GradCheckReport GradCheck(const std::function<double()>& loss,
                          std::span<const GradCheckTarget> targets,
                          const GradCheckOptions& options = {});

}  // namespace antispoof::nnet
