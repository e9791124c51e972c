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

#include <random>
#include <string>

#include "fasr/params.hpp"
#include "fasr/tensor.hpp"

namespace fasr {

// Affine layer "<prefix>.W" (out x in) and "<prefix>.b" (1 x out), both
// initialized uniform in +-1/sqrt(in).
void add_linear_params(ParameterSet& params, const std::string& prefix, int in, int out, std::mt19937_64& rng);
Var apply_linear(ParamScope& scope, const std::string& prefix, const Var& x);

// LSTM layer parameters "<prefix>.W_ih" (4H x in), "<prefix>.W_hh" (4H x H)
// and "<prefix>.b" (1 x 4H). Gate order along the 4H axis: input, forget,
// cell candidate, output.
void add_lstm_params(ParameterSet& params, const std::string& prefix, int in, int units, std::mt19937_64& rng);

struct LstmState {
  Var h;  // 1 x units
  Var c;  // 1 x units
};

LstmState zero_lstm_state(int units);

// One step from a precomputed input projection x.W_ih^T + b (1 x 4H).
LstmState lstm_step_projected(ParamScope& scope, const std::string& prefix, const Var& projected,
                              const LstmState& prev);
LstmState lstm_step(ParamScope& scope, const std::string& prefix, const Var& x, const LstmState& prev);

// Runs the layer over the rows of x (T x in) from a zero state; returns the
// T x units hidden sequence in input order.
Var lstm_sequence(ParamScope& scope, const std::string& prefix, const Var& x, bool reverse);

}  // namespace fasr
