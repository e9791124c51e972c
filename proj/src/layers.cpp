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

#include "fasr/layers.hpp"

#include <cmath>

namespace fasr {

void add_linear_params(ParameterSet& params, const std::string& prefix, int in, int out, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  params.add(prefix + ".W", uniform_matrix(out, in, bound, rng));
  params.add(prefix + ".b", uniform_matrix(1, out, bound, rng));
}

Var apply_linear(ParamScope& scope, const std::string& prefix, const Var& x) {
  return linear(x, scope.get(prefix + ".W"), scope.get(prefix + ".b"));
}

void add_lstm_params(ParameterSet& params, const std::string& prefix, int in, int units, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(units));
  params.add(prefix + ".W_ih", uniform_matrix(4 * units, in, bound, rng));
  params.add(prefix + ".W_hh", uniform_matrix(4 * units, units, bound, rng));
  params.add(prefix + ".b", uniform_matrix(1, 4 * units, bound, rng));
}

LstmState zero_lstm_state(int units) {
  return {Var::constant(Matrix(1, units, 0.0)), Var::constant(Matrix(1, units, 0.0))};
}

LstmState lstm_step_projected(ParamScope& scope, const std::string& prefix, const Var& projected,
                              const LstmState& prev) {
  const int units = prev.h.cols();
  const Var gates = add(projected, matmul_nt(prev.h, scope.get(prefix + ".W_hh")));
  const Var i = sigmoid(slice_cols(gates, 0, units));
  const Var f = sigmoid(slice_cols(gates, units, units));
  const Var g = tanh(slice_cols(gates, 2 * units, units));
  const Var o = sigmoid(slice_cols(gates, 3 * units, units));
  const Var c = add(mul(f, prev.c), mul(i, g));
  return {mul(o, tanh(c)), c};
}

LstmState lstm_step(ParamScope& scope, const std::string& prefix, const Var& x, const LstmState& prev) {
  const Var projected = linear(x, scope.get(prefix + ".W_ih"), scope.get(prefix + ".b"));
  return lstm_step_projected(scope, prefix, projected, prev);
}

Var lstm_sequence(ParamScope& scope, const std::string& prefix, const Var& x, bool reverse) {
  const Var w_hh = scope.get(prefix + ".W_hh");
  const int units = w_hh.cols();
  const int steps = x.rows();
  const Var projected = linear(x, scope.get(prefix + ".W_ih"), scope.get(prefix + ".b"));
  std::vector<Var> outputs(static_cast<std::size_t>(steps));
  LstmState state = zero_lstm_state(units);
  for (int s = 0; s < steps; ++s) {
    const int t = reverse ? steps - 1 - s : s;
    state = lstm_step_projected(scope, prefix, slice_rows(projected, t, 1), state);
    outputs[static_cast<std::size_t>(t)] = state.h;
  }
  return concat_rows(outputs);
}

}  // namespace fasr
