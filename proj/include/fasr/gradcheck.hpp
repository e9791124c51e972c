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

#pragma once

#include <functional>
#include <span>
#include <string>

#include "fasr/tensor.hpp"

namespace fasr {

struct GradcheckResult {
  double max_relative_error = 0.0;
  bool finite = true;
  // "<param index>[<entry>]" of the worst entry, or of the first non-finite value.
  std::string location;
};

// Compares backward() against five-point central differences for every entry
// of every parameter, at `step`, `step` / 10 and `step` / 100; the closest
// estimate counts, so a nearby kink (ReLU, max pooling) or rounding at one
// step size does not dominate. `loss` must rebuild the graph from the given
// leaves on each call and be deterministic. Relative error per entry is
// |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
GradcheckResult gradcheck(const std::function<Var()>& loss, std::span<Var> parameters, double step = 1e-3);

}  // namespace fasr
