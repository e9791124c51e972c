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

#include <map>
#include <string>

#include "fasr/params.hpp"

namespace fasr {

using GradientMap = std::map<std::string, Matrix>;

// dst[name] += src[name] for every entry of src.
void accumulate_gradients(GradientMap& dst, const GradientMap& src);
double global_norm(const GradientMap& grads);
// Rescales so the global norm is at most max_norm; returns the norm before.
double clip_gradients(GradientMap& grads, double max_norm);

// p -= lr * g.
void sgd_update(ParameterSet& params, const GradientMap& grads, double learning_rate);

// Adadelta with a mutable epsilon. Accumulators are created on first use.
class Adadelta {
 public:
  explicit Adadelta(double rho = 0.95, double epsilon = 1e-8) : rho_(rho), epsilon_(epsilon) {}

  void step(ParameterSet& params, const GradientMap& grads);

  double epsilon() const { return epsilon_; }
  void set_epsilon(double e) { epsilon_ = e; }
  double rho() const { return rho_; }

 private:
  double rho_;
  double epsilon_;
  std::map<std::string, Matrix> sq_grad_;
  std::map<std::string, Matrix> sq_update_;
};

}  // namespace fasr
