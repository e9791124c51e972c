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

#include "fasr/model.hpp"

#include <stdexcept>

#include "fasr/error.hpp"
#include "fasr/fusion.hpp"

namespace fasr {

std::string_view to_string(FusionMode mode) {
  switch (mode) {
    case FusionMode::kNone:
      return "none";
    case FusionMode::kShallow:
      return "shallow";
    case FusionMode::kCold:
      return "cold";
    case FusionMode::kDeep:
      return "deep";
  }
  return "none";
}

FusionMode parse_fusion_mode(std::string_view text) {
  if (text == "none") return FusionMode::kNone;
  if (text == "shallow") return FusionMode::kShallow;
  if (text == "cold") return FusionMode::kCold;
  if (text == "deep") return FusionMode::kDeep;
  throw ConfigError("unknown fusion mode '" + std::string(text) + "' (expected none, shallow, cold or deep)");
}

bool has_fusion_layer(FusionMode mode) { return mode == FusionMode::kCold || mode == FusionMode::kDeep; }

AsrModel make_asr_model(S2SConfig config, Vocabulary vocab, std::uint64_t seed) {
  config.vocab_size = vocab.size();
  AsrModel m;
  m.config = std::move(config);
  m.vocab = std::move(vocab);
  std::mt19937_64 rng(mix_seed(seed, 0x733273));
  add_s2s_params(m.params, m.config, rng);
  return m;
}

LanguageModel embedded_lm(const AsrModel& model) {
  if (!model.lm_config) throw ConfigError("model has no embedded language model");
  LanguageModel lm;
  lm.config = *model.lm_config;
  lm.vocab = model.vocab;
  for (const auto& name : model.params.names_with_prefix("lm.")) lm.params.add(name, model.params.at(name));
  return lm;
}

ModelState initial_model_state(const AsrModel& model, const AttentionMemory& memory, const LmBinding& lm) {
  ModelState s;
  s.decoder = initial_decoder_state(model.config, memory);
  if (lm.active()) s.lm = initial_lm_state(*lm.config);
  return s;
}

ModelStep model_step(ParamScope& scope, const AsrModel& model, const ModelState& state, int previous_token,
                     const AttentionMemory& memory, const LmBinding& lm) {
  ModelStep out;
  out.state.decoder = decode_step(scope, model.config, state.decoder, previous_token, memory);
  Var lm_feature;
  if (lm.active()) {
    if (!state.lm) throw std::logic_error("LM binding without LM state");
    LmStep step = lm_step(*lm.scope, *lm.config, *state.lm, previous_token);
    out.lm_log_probs = step.log_probs;
    lm_feature = step.feature;
    out.state.lm = std::move(step.state);
  }
  if (has_fusion_layer(model.fusion)) {
    if (!lm_feature.defined()) throw ConfigError("fused model needs its language model");
    out.log_probs = cold_fusion_log_probs(scope, out.state.decoder.top(), lm_feature);
  } else {
    out.log_probs = log_softmax(output_logits(scope, out.state.decoder.top()));
  }
  return out;
}

}  // namespace fasr
