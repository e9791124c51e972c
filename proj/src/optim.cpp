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

#include "fasr/optim.hpp"

#include <cmath>

#include "fasr/error.hpp"
#include "fasr/simd/kernels.hpp"

namespace fasr {

void accumulate_gradients(GradientMap& dst, const GradientMap& src) {
  const auto& k = simd::active();
  for (const auto& [name, g] : src) {
    auto it = dst.find(name);
    if (it == dst.end()) {
      dst.emplace(name, g);
      continue;
    }
    if (it->second.rows != g.rows || it->second.cols != g.cols) {
      throw ShapeError("accumulate_gradients", 0, "gradient shape mismatch for " + name);
    }
    k.acc(g.data.data(), it->second.data.data(), g.size());
  }
}

double global_norm(const GradientMap& grads) {
  const auto& k = simd::active();
  double total = 0.0;
  for (const auto& [name, g] : grads) total += k.dot(g.data.data(), g.data.data(), g.size());
  return std::sqrt(total);
}

double clip_gradients(GradientMap& grads, double max_norm) {
  const double norm = global_norm(grads);
  if (max_norm > 0.0 && norm > max_norm) {
    const double f = max_norm / norm;
    for (auto& [name, g] : grads)
      for (double& v : g.data) v *= f;
  }
  return norm;
}

void sgd_update(ParameterSet& params, const GradientMap& grads, double learning_rate) {
  const auto& k = simd::active();
  for (const auto& [name, g] : grads) {
    Matrix& p = params.at(name);
    k.axpy(-learning_rate, g.data.data(), p.data.data(), g.size());
  }
}

void Adadelta::step(ParameterSet& params, const GradientMap& grads) {
  for (const auto& [name, g] : grads) {
    Matrix& p = params.at(name);
    auto [sg, fresh_g] = sq_grad_.try_emplace(name, g.rows, g.cols, 0.0);
    auto [su, fresh_u] = sq_update_.try_emplace(name, g.rows, g.cols, 0.0);
    double* eg = sg->second.data.data();
    double* ed = su->second.data.data();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double gi = g.data[i];
      eg[i] = rho_ * eg[i] + (1.0 - rho_) * gi * gi;
      const double delta = -std::sqrt(ed[i] + epsilon_) / std::sqrt(eg[i] + epsilon_) * gi;
      ed[i] = rho_ * ed[i] + (1.0 - rho_) * delta * delta;
      p.data[i] += delta;
    }
  }
}

}  // namespace fasr
