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

#include "fasr/fusion.hpp"

#include <array>

#include "fasr/error.hpp"
#include "fasr/layers.hpp"

namespace fasr {

void add_fusion_params(ParameterSet& params, int s2s_dim, int lm_dim, int vocab_size, const FusionConfig& config,
                       std::mt19937_64& rng) {
  if (config.lm_projection_dim < 1 || config.bottleneck_dim < 1) throw ConfigError("fusion sizes must be positive");
  const int proj = config.lm_projection_dim;
  add_linear_params(params, "fusion.lm_proj", lm_dim, proj, rng);
  add_linear_params(params, "fusion.gate", s2s_dim + proj, proj, rng);
  add_linear_params(params, "fusion.cf", s2s_dim + proj, config.bottleneck_dim, rng);
  add_linear_params(params, "fusion.out", config.bottleneck_dim, vocab_size, rng);
}

Var cold_fusion_log_probs(ParamScope& scope, const Var& s2s_state, const Var& lm_feature) {
  const Var s_lm = apply_linear(scope, "fusion.lm_proj", lm_feature);
  const std::array<Var, 2> gate_in{s2s_state, s_lm};
  const Var gate = sigmoid(apply_linear(scope, "fusion.gate", concat_cols(gate_in)));
  const std::array<Var, 2> cf_in{s2s_state, mul(gate, s_lm)};
  const Var s_cf = apply_linear(scope, "fusion.cf", concat_cols(cf_in));
  return log_softmax(relu(apply_linear(scope, "fusion.out", s_cf)));
}

FusedModel attach_fusion(const AsrModel& s2s, const LanguageModel& lm, FusionMode mode, const FusionConfig& config,
                         std::uint64_t seed) {
  if (!(s2s.vocab == lm.vocab)) throw ConfigError("S2S and LM vocabularies differ");
  if (has_fusion_layer(s2s.fusion) || !s2s.params.names_with_prefix("fusion.").empty()) {
    throw ConfigError("model already carries a fusion head");
  }
  FusedModel out;
  out.model = s2s;
  out.model.fusion = mode;
  if (!has_fusion_layer(mode)) {
    out.trainable = all_trainable(out.model.params);
    return out;
  }

  out.model.fusion_config = config;
  out.model.lm_config = lm.config;
  out.model.params.erase_prefix("lm.");
  out.model.params.merge(lm.params);

  ParameterSet fresh;
  std::mt19937_64 rng(mix_seed(seed, 0x66757365));
  add_fusion_params(fresh, s2s.config.decoder.units, lm.config.units, s2s.vocab.size(), config, rng);
  out.initialized = fresh.names();
  out.model.params.merge(fresh);

  for (const auto& name : out.model.params.names()) {
    const bool is_lm = name.starts_with("lm.");
    const bool is_fusion = name.starts_with("fusion.");
    out.trainable[name] = mode == FusionMode::kDeep ? is_fusion : !is_lm;
  }
  return out;
}

AsrModel detach_fusion(const AsrModel& model) {
  AsrModel out = model;
  out.params.erase_prefix("fusion.");
  out.params.erase_prefix("lm.");
  out.fusion = FusionMode::kNone;
  out.lm_config.reset();
  return out;
}

}  // namespace fasr
