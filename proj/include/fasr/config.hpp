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

// Experiment configuration. A file overrides the defaults of its preset
// ("desk" or "paper"); unknown keys are rejected.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "fasr/decoder.hpp"
#include "fasr/model.hpp"
#include "fasr/rnnlm.hpp"
#include "fasr/s2s.hpp"
#include "fasr/synth.hpp"
#include "fasr/trainer.hpp"

namespace fasr {

struct LanguageSpec {
  std::string name;
  int alphabet_size = 10;
  std::uint64_t seed = 0;
};

struct DataConfig {
  std::uint64_t pool_seed = 7;
  synth::LanguageOptions options;
  std::vector<LanguageSpec> seed_languages;
  LanguageSpec target;
  int seed_train_utterances = 200;  // per seed language
  int seed_valid_utterances = 20;
  int target_train_utterances = 30;
  int target_valid_utterances = 10;
  int target_test_utterances = 50;
  int lm_text_factor = 5;  // LM-only sentences per paired target utterance
  int min_length = 3;
  int max_length = 8;
};

struct ExperimentConfig {
  std::string preset = "desk";
  std::uint64_t seed = 1;
  DataConfig data;
  S2SConfig model;  // vocab_size is filled in from the vocabulary
  LmConfig lm;
  LmTrainConfig lm_train;
  FusionConfig fusion_layer;
  TrainConfig seed_train;
  TrainConfig adapt_train;
  DecodeConfig decode;
  FusionMode fusion = FusionMode::kNone;

  void validate() const;
};

ExperimentConfig preset_config(const std::string& preset);

// Throws ConfigError for unknown keys, wrong types or invalid values.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& config);

nlohmann::json to_json(const S2SConfig& c);
S2SConfig s2s_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const LmConfig& c);
LmConfig lm_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FusionConfig& c);
FusionConfig fusion_config_from_json(const nlohmann::json& j);

}  // namespace fasr
