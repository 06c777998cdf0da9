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

#include "antispoof/nnet/grad_check.h"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace antispoof::nnet {

double GradCheckReport::MaxError() const {
  double m = 0.0;
  for (const auto& e : entries) m = std::max(m, e.max_rel_error);
  return m;
}

std::string GradCheckReport::ToString() const {
  std::ostringstream ss;
  for (const auto& e : entries)
    ss << e.name << ": max relative error " << e.max_rel_error << " over "
       << e.checked << " coordinates (" << e.excluded << " at kinks)\n";
  return ss.str();
}

GradCheckReport GradCheck(const std::function<double()>& loss,
                          std::span<const GradCheckTarget> targets,
                          const GradCheckOptions& options) {
  GradCheckReport report;
  for (const auto& target : targets) {
    GradCheckEntry entry;
    entry.name = target.name;
    const std::size_t n = target.values.size();
    const std::size_t stride =
        options.max_coordinates == 0 || n <= options.max_coordinates
            ? 1
            : (n + options.max_coordinates - 1) / options.max_coordinates;
    const double f0 = loss();
    for (std::size_t i = 0; i < n; i += stride) {
      double& x = target.values[i];
      const double x0 = x;
      const double h = options.step * std::max(1.0, std::abs(x0));
      x = x0 + h;
      const double fp = loss();
      x = x0 - h;
      const double fm = loss();
      x = x0;
      const double forward = (fp - f0) / h;
      const double backward = (f0 - fm) / h;
      const double kink_scale =
          std::max({std::abs(forward), std::abs(backward), options.denominator_floor});
      if (std::abs(forward - backward) / kink_scale > options.kink_tolerance) {
        ++entry.excluded;
        continue;
      }
      const double numeric = (fp - fm) / (2.0 * h);
      const double analytic = target.analytic[i];
      const double denom = std::max(
          {std::abs(numeric), std::abs(analytic), options.denominator_floor});
      entry.max_rel_error =
          std::max(entry.max_rel_error, std::abs(numeric - analytic) / denom);
      ++entry.checked;
    }
    report.entries.push_back(entry);
  }
  return report;
}

}  // namespace antispoof::nnet
