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

// A complete recognizer: S2S topology, vocabulary and parameters, optionally
// with a gated LM fusion head and the LM it reads from embedded under "lm.*".

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "fasr/params.hpp"
#include "fasr/rnnlm.hpp"
#include "fasr/s2s.hpp"
#include "fasr/vocab.hpp"

namespace fasr {

enum class FusionMode { kNone, kShallow, kCold, kDeep };

std::string_view to_string(FusionMode mode);
// Throws ConfigError for anything but none/shallow/cold/deep.
FusionMode parse_fusion_mode(std::string_view text);
// Cold and deep replace the output layer with the gated head.
bool has_fusion_layer(FusionMode mode);

struct FusionConfig {
  int lm_projection_dim = 64;  // dim(s^LM)
  int bottleneck_dim = 64;     // dim(s^CF)
};

struct AsrModel {
  S2SConfig config;
  Vocabulary vocab;
  ParameterSet params;
  FusionMode fusion = FusionMode::kNone;
  FusionConfig fusion_config;
  std::optional<LmConfig> lm_config;  // present when "lm.*" is embedded
};

// Fresh S2S model sized to the vocabulary.
AsrModel make_asr_model(S2SConfig config, Vocabulary vocab, std::uint64_t seed);

// The embedded LM as a standalone model. Throws ConfigError when absent.
LanguageModel embedded_lm(const AsrModel& model);

// Language model used while decoding or training one utterance.
struct LmBinding {
  ParamScope* scope = nullptr;
  const LmConfig* config = nullptr;
  bool active() const { return scope != nullptr; }
};

struct ModelState {
  DecoderState decoder;
  std::optional<LmState> lm;
};

struct ModelStep {
  ModelState state;
  Var log_probs;     // ln P_S2S(. | y_<u, x), fused when the model has a fusion head
  Var lm_log_probs;  // ln P_LM(. | y_<u), undefined without an LM
};

// Initial state for one utterance. The LM state is created when `lm` is active.
ModelState initial_model_state(const AsrModel& model, const AttentionMemory& memory, const LmBinding& lm);

// Consumes y_{u-1} and returns the next-token distributions.
ModelStep model_step(ParamScope& scope, const AsrModel& model, const ModelState& state, int previous_token,
                     const AttentionMemory& memory, const LmBinding& lm);

}  // namespace fasr
