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

// LM integration: shallow score interpolation and the gated cold/deep fusion
// head, stored under "fusion.*":
//
//   s_lm = W_lm d_lm + b_lm
//   g    = sigmoid(W_g [s; s_lm] + b_g)
//   s_cf = W_cf [s; g * s_lm] + b_cf
//   P    = softmax(relu(W_out s_cf + b_out))

#include <cstdint>
#include <string>
#include <vector>

#include "fasr/model.hpp"
#include "fasr/params.hpp"
#include "fasr/rnnlm.hpp"

namespace fasr {

void add_fusion_params(ParameterSet& params, int s2s_dim, int lm_dim, int vocab_size, const FusionConfig& config,
                       std::mt19937_64& rng);

// Returns log-probabilities (1 x V). Throws ShapeError on dimension mismatch.
Var cold_fusion_log_probs(ParamScope& scope, const Var& s2s_state, const Var& lm_feature);

inline double shallow_fusion_combine(double asr_log_prob, double lm_log_prob, double beta) {
  return asr_log_prob + beta * lm_log_prob;
}

struct FusedModel {
  AsrModel model;
  TrainableMask trainable;
  std::vector<std::string> initialized;  // freshly created parameters
};

// Copies `s2s`, embeds `lm` and adds a fresh fusion head. Cold: everything
// but "lm.*" trainable. Deep: only "fusion.*" trainable. None/shallow return
// a plain copy with everything trainable. Throws ConfigError when the
// vocabularies differ or the model already carries a fusion head.
FusedModel attach_fusion(const AsrModel& s2s, const LanguageModel& lm, FusionMode mode, const FusionConfig& config,
                         std::uint64_t seed);

// Drops "fusion.*" and "lm.*" and resets the mode to none.
AsrModel detach_fusion(const AsrModel& model);

}  // namespace fasr
