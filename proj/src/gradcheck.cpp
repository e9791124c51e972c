// Copyright 2026 The fasr Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fasr/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fasr {

GradcheckResult gradcheck(const std::function<Var()>& loss, std::span<Var> parameters, double step) {
  GradcheckResult result;
  auto where = [](std::size_t p, std::size_t i) { return std::to_string(p) + "[" + std::to_string(i) + "]"; };

  for (auto& p : parameters) p.zero_grad();
  const Var l = loss();
  if (!std::isfinite(l.item())) {
    result.finite = false;
    result.location = "loss";
    return result;
  }
  backward(l);

  std::vector<Matrix> analytic;
  analytic.reserve(parameters.size());
  for (auto& p : parameters) {
    analytic.push_back(p.has_grad() ? p.grad() : Matrix(p.rows(), p.cols(), 0.0));
  }

  NoGradGuard no_grad;
  for (std::size_t pi = 0; pi < parameters.size(); ++pi) {
    Matrix& value = parameters[pi].mutable_value();
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double saved = value.data[i];
      auto at = [&](double offset) {
        value.data[i] = saved + offset;
        return loss().item();
      };
      auto stencil = [&](double h) {
        const double p1 = at(h), m1 = at(-h), p2 = at(2.0 * h), m2 = at(-2.0 * h);
        return (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * h);
      };
      const double a = analytic[pi].data[i];
      double rel = std::numeric_limits<double>::infinity();
      for (double h : {step, step / 10.0, step / 100.0}) {
        const double numeric = stencil(h);
        if (!std::isfinite(numeric) || !std::isfinite(a)) {
          value.data[i] = saved;
          result.finite = false;
          result.location = where(pi, i);
          return result;
        }
        const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
        rel = std::min(rel, std::abs(a - numeric) / denom);
      }
      value.data[i] = saved;
      if (rel > result.max_relative_error) {
        result.max_relative_error = rel;
        result.location = where(pi, i);
      }
    }
  }
  return result;
}

}  // namespace fasr
