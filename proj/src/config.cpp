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

#include "fasr/config.hpp"

#include <fstream>
#include <set>

#include "fasr/error.hpp"

namespace fasr {

using nlohmann::json;

namespace {

void reject_unknown(const json& given, const json& known, const std::string& path) {
  if (!given.is_object()) return;
  for (const auto& [key, value] : given.items()) {
    const std::string where = path.empty() ? key : path + "." + key;
    if (!known.is_object() || !known.contains(key)) throw ConfigError("unknown config key '" + where + "'");
    if (value.is_null()) throw ConfigError("config key '" + where + "' is null");
    if (value.is_object()) reject_unknown(value, known.at(key), where);
  }
}

json to_json(const LanguageSpec& s) { return {{"name", s.name}, {"alphabet_size", s.alphabet_size}, {"seed", s.seed}}; }

LanguageSpec language_spec_from_json(const json& j) {
  LanguageSpec s;
  s.name = j.at("name").get<std::string>();
  s.alphabet_size = j.at("alphabet_size").get<int>();
  s.seed = j.at("seed").get<std::uint64_t>();
  return s;
}

json to_json(const synth::LanguageOptions& o) {
  return {{"pool_size", o.pool_size},
          {"feature_dim", o.feature_dim},
          {"min_duration", o.min_duration},
          {"max_duration", o.max_duration},
          {"noise_sigma", o.noise_sigma},
          {"top_successor_mass", o.top_successor_mass},
          {"second_successor_mass", o.second_successor_mass}};
}

synth::LanguageOptions language_options_from_json(const json& j) {
  synth::LanguageOptions o;
  o.pool_size = j.at("pool_size").get<int>();
  o.feature_dim = j.at("feature_dim").get<int>();
  o.min_duration = j.at("min_duration").get<int>();
  o.max_duration = j.at("max_duration").get<int>();
  o.noise_sigma = j.at("noise_sigma").get<double>();
  o.top_successor_mass = j.at("top_successor_mass").get<double>();
  o.second_successor_mass = j.at("second_successor_mass").get<double>();
  return o;
}

json to_json(const DataConfig& d) {
  json langs = json::array();
  for (const auto& l : d.seed_languages) langs.push_back(to_json(l));
  return {{"pool_seed", d.pool_seed},
          {"language_options", to_json(d.options)},
          {"seed_languages", langs},
          {"target", to_json(d.target)},
          {"seed_train_utterances", d.seed_train_utterances},
          {"seed_valid_utterances", d.seed_valid_utterances},
          {"target_train_utterances", d.target_train_utterances},
          {"target_valid_utterances", d.target_valid_utterances},
          {"target_test_utterances", d.target_test_utterances},
          {"lm_text_factor", d.lm_text_factor},
          {"min_length", d.min_length},
          {"max_length", d.max_length}};
}

DataConfig data_config_from_json(const json& j) {
  DataConfig d;
  d.pool_seed = j.at("pool_seed").get<std::uint64_t>();
  d.options = language_options_from_json(j.at("language_options"));
  for (const auto& l : j.at("seed_languages")) d.seed_languages.push_back(language_spec_from_json(l));
  d.target = language_spec_from_json(j.at("target"));
  d.seed_train_utterances = j.at("seed_train_utterances").get<int>();
  d.seed_valid_utterances = j.at("seed_valid_utterances").get<int>();
  d.target_train_utterances = j.at("target_train_utterances").get<int>();
  d.target_valid_utterances = j.at("target_valid_utterances").get<int>();
  d.target_test_utterances = j.at("target_test_utterances").get<int>();
  d.lm_text_factor = j.at("lm_text_factor").get<int>();
  d.min_length = j.at("min_length").get<int>();
  d.max_length = j.at("max_length").get<int>();
  return d;
}

json to_json(const TrainConfig& c) {
  return {{"batch_size", c.batch_size},   {"ctc_weight", c.ctc_weight},       {"rho", c.rho},
          {"epsilon", c.epsilon},         {"epsilon_decay", c.epsilon_decay}, {"clip_norm", c.clip_norm},
          {"max_epochs", c.max_epochs},   {"patience", c.patience},           {"sampling_prob", c.sampling_prob},
          {"dropout", c.dropout},         {"threads", c.threads}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  c.batch_size = j.at("batch_size").get<int>();
  c.ctc_weight = j.at("ctc_weight").get<double>();
  c.rho = j.at("rho").get<double>();
  c.epsilon = j.at("epsilon").get<double>();
  c.epsilon_decay = j.at("epsilon_decay").get<double>();
  c.clip_norm = j.at("clip_norm").get<double>();
  c.max_epochs = j.at("max_epochs").get<int>();
  c.patience = j.at("patience").get<int>();
  c.sampling_prob = j.at("sampling_prob").get<double>();
  c.dropout = j.at("dropout").get<double>();
  c.threads = j.at("threads").get<int>();
  return c;
}

json to_json(const LmTrainConfig& c) {
  return {{"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate},
          {"clip_norm", c.clip_norm},
          {"max_halvings", c.max_halvings}};
}

LmTrainConfig lm_train_from_json(const json& j) {
  LmTrainConfig c;
  c.epochs = j.at("epochs").get<int>();
  c.batch_size = j.at("batch_size").get<int>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.clip_norm = j.at("clip_norm").get<double>();
  c.max_halvings = j.at("max_halvings").get<int>();
  return c;
}

json to_json(const DecodeConfig& c) {
  return {{"beam", c.beam},
          {"ctc_weight", c.ctc_weight},
          {"lm_weight", c.lm_weight},
          {"max_length_ratio", c.max_length_ratio},
          {"max_length_offset", c.max_length_offset},
          {"max_length", c.max_length},
          {"length_penalty", c.length_penalty},
          {"language_policy", std::string(to_string(c.language_policy))},
          {"nbest", c.nbest}};
}

DecodeConfig decode_config_from_json(const json& j) {
  DecodeConfig c;
  c.beam = j.at("beam").get<int>();
  c.ctc_weight = j.at("ctc_weight").get<double>();
  c.lm_weight = j.at("lm_weight").get<double>();
  c.max_length_ratio = j.at("max_length_ratio").get<double>();
  c.max_length_offset = j.at("max_length_offset").get<int>();
  c.max_length = j.at("max_length").get<int>();
  c.length_penalty = j.at("length_penalty").get<double>();
  c.language_policy = parse_language_policy(j.at("language_policy").get<std::string>());
  c.nbest = j.at("nbest").get<int>();
  return c;
}

}  // namespace

json to_json(const S2SConfig& c) {
  return {{"encoder",
           {{"feature_dim", c.encoder.feature_dim},
            {"channels", c.encoder.channels},
            {"blstm_layers", c.encoder.blstm_layers},
            {"blstm_units", c.encoder.blstm_units}}},
          {"attention",
           {{"dim", c.attention.dim},
            {"location_channels", c.attention.location_channels},
            {"location_kernel", c.attention.location_kernel}}},
          {"decoder", {{"embed_dim", c.decoder.embed_dim}, {"layers", c.decoder.layers}, {"units", c.decoder.units}}},
          {"vocab_size", c.vocab_size}};
}

S2SConfig s2s_config_from_json(const json& j) {
  S2SConfig c;
  const auto& e = j.at("encoder");
  c.encoder.feature_dim = e.at("feature_dim").get<int>();
  c.encoder.channels = e.at("channels").get<std::vector<int>>();
  c.encoder.blstm_layers = e.at("blstm_layers").get<int>();
  c.encoder.blstm_units = e.at("blstm_units").get<int>();
  const auto& a = j.at("attention");
  c.attention.dim = a.at("dim").get<int>();
  c.attention.location_channels = a.at("location_channels").get<int>();
  c.attention.location_kernel = a.at("location_kernel").get<int>();
  const auto& d = j.at("decoder");
  c.decoder.embed_dim = d.at("embed_dim").get<int>();
  c.decoder.layers = d.at("layers").get<int>();
  c.decoder.units = d.at("units").get<int>();
  c.vocab_size = j.at("vocab_size").get<int>();
  return c;
}

json to_json(const LmConfig& c) {
  return {{"vocab_size", c.vocab_size}, {"embed_dim", c.embed_dim}, {"layers", c.layers}, {"units", c.units}};
}

LmConfig lm_config_from_json(const json& j) {
  LmConfig c;
  c.vocab_size = j.at("vocab_size").get<int>();
  c.embed_dim = j.at("embed_dim").get<int>();
  c.layers = j.at("layers").get<int>();
  c.units = j.at("units").get<int>();
  return c;
}

json to_json(const FusionConfig& c) {
  return {{"lm_projection_dim", c.lm_projection_dim}, {"bottleneck_dim", c.bottleneck_dim}};
}

FusionConfig fusion_config_from_json(const json& j) {
  FusionConfig c;
  c.lm_projection_dim = j.at("lm_projection_dim").get<int>();
  c.bottleneck_dim = j.at("bottleneck_dim").get<int>();
  return c;
}

ExperimentConfig preset_config(const std::string& preset) {
  ExperimentConfig c;
  c.preset = preset;
  c.data.seed_languages = {{"alpha", 10, 11}, {"beta", 10, 12}, {"gamma", 10, 13}};
  c.data.target = {"delta", 10, 14};
  c.adapt_train.sampling_prob = 0.4;
  c.adapt_train.dropout = 0.2;
  if (preset == "desk") {
    c.seed_train.epsilon = 1e-4;
    c.seed_train.max_epochs = 30;
    c.seed_train.patience = 6;
    c.adapt_train.epsilon = 1e-4;
    c.adapt_train.max_epochs = 30;
    c.adapt_train.patience = 6;
    return c;
  }
  if (preset == "paper") {
    c.data.options.feature_dim = 83;
    c.model.encoder.feature_dim = 83;
    c.model.encoder.channels = {64, 128};
    c.model.encoder.blstm_layers = 5;
    c.model.encoder.blstm_units = 1024;
    c.model.attention.dim = 1024;
    c.model.decoder = {1024, 2, 1024};
    c.lm = {0, 650, 2, 650};
    c.fusion_layer = {1024, 1024};
    return c;
  }
  throw ConfigError("unknown preset '" + preset + "' (expected desk or paper)");
}

void ExperimentConfig::validate() const {
  if (data.seed_languages.empty()) throw ConfigError("at least one seed language is required");
  std::set<std::string> names;
  for (const auto& l : data.seed_languages)
    if (!names.insert(l.name).second) throw ConfigError("duplicate language name '" + l.name + "'");
  if (!names.insert(data.target.name).second) throw ConfigError("target language must differ from seed languages");
  for (const auto& n : names)
    if (n.empty()) throw ConfigError("language names must be non-empty");
  if (data.seed_train_utterances < 1 || data.seed_valid_utterances < 1 || data.target_train_utterances < 1 ||
      data.target_valid_utterances < 1 || data.target_test_utterances < 1 || data.lm_text_factor < 0) {
    throw ConfigError("utterance counts must be positive");
  }
  if (data.min_length < 1 || data.max_length < data.min_length) throw ConfigError("invalid sentence length range");
  if (data.options.feature_dim != model.encoder.feature_dim) {
    throw ConfigError("data feature_dim and model encoder feature_dim differ");
  }
  S2SConfig probe = model;
  probe.vocab_size = kNumReserved + 1;
  probe.validate();
  LmConfig lm_probe = lm;
  lm_probe.vocab_size = kNumReserved + 1;
  lm_probe.validate();
  seed_train.validate();
  adapt_train.validate();
  decode.validate();
}

json to_json(const ExperimentConfig& c) {
  return {{"preset", c.preset},
          {"seed", c.seed},
          {"data", to_json(c.data)},
          {"model", to_json(c.model)},
          {"lm", to_json(c.lm)},
          {"lm_train", to_json(c.lm_train)},
          {"fusion_layer", to_json(c.fusion_layer)},
          {"seed_train", to_json(c.seed_train)},
          {"adapt_train", to_json(c.adapt_train)},
          {"decode", to_json(c.decode)},
          {"fusion", std::string(to_string(c.fusion))}};
}

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  const std::string preset = j.contains("preset") ? j.at("preset").get<std::string>() : "desk";
  json merged = to_json(preset_config(preset));
  reject_unknown(j, merged, "");
  merged.merge_patch(j);
  try {
    ExperimentConfig c;
    c.preset = merged.at("preset").get<std::string>();
    c.seed = merged.at("seed").get<std::uint64_t>();
    c.data = data_config_from_json(merged.at("data"));
    c.model = s2s_config_from_json(merged.at("model"));
    c.lm = lm_config_from_json(merged.at("lm"));
    c.lm_train = lm_train_from_json(merged.at("lm_train"));
    c.lm_train.seed = c.seed;
    c.fusion_layer = fusion_config_from_json(merged.at("fusion_layer"));
    c.seed_train = train_config_from_json(merged.at("seed_train"));
    c.adapt_train = train_config_from_json(merged.at("adapt_train"));
    c.decode = decode_config_from_json(merged.at("decode"));
    c.fusion = parse_fusion_mode(merged.at("fusion").get<std::string>());
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse config " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

}  // namespace fasr
