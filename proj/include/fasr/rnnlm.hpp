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

// Character-level LSTM language model over the universal vocabulary.
// Sentences are framed as inputs [sos, lang, c1..cn] predicting
// [lang, c1..cn, eos]. Parameters live under "lm.*".

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "fasr/layers.hpp"
#include "fasr/params.hpp"
#include "fasr/vocab.hpp"

namespace fasr {

struct LmConfig {
  int vocab_size = 0;
  int embed_dim = 32;
  int layers = 2;
  int units = 64;

  void validate() const;
};

struct LanguageModel {
  LmConfig config;
  Vocabulary vocab;
  ParameterSet params;
};

void add_lm_params(ParameterSet& params, const LmConfig& config, std::mt19937_64& rng);

struct LmState {
  std::vector<LstmState> layers;
  const Var& feature() const { return layers.back().h; }  // d^LM
};

LmState initial_lm_state(const LmConfig& config);

struct LmStep {
  LmState state;
  Var log_probs;  // 1 x V, after consuming the token
  Var feature;    // top hidden state after consuming the token
};

// Throws std::out_of_range for a token outside the vocabulary.
LmStep lm_step(ParamScope& scope, const LmConfig& config, const LmState& state, int token);

// `encoded` is [lang, c1..cn] as produced by Vocabulary::encode.
struct FramedSentence {
  std::vector<int> inputs;
  std::vector<int> targets;
};
FramedSentence frame_sentence(std::span<const int> encoded);

// Summed negative log-likelihood of the framed sentence (1 x 1).
Var sentence_nll(ParamScope& scope, const LmConfig& config, std::span<const int> encoded);

// Same quantity evaluated step by step with lm_step.
double sentence_log_likelihood_stepwise(const ParameterSet& params, const LmConfig& config,
                                        std::span<const int> encoded);

// exp(total NLL / predicted tokens).
double perplexity(const ParameterSet& params, const LmConfig& config, const std::vector<std::vector<int>>& sentences);

struct LmTrainConfig {
  int epochs = 20;
  int batch_size = 16;
  double learning_rate = 0.5;
  double clip_norm = 5.0;
  // Training stops early once the rate has been halved this many times.
  int max_halvings = 6;
  std::uint64_t seed = 1;
};

struct LmEpochRecord {
  int epoch = 0;
  double train_perplexity = 0.0;
  double valid_perplexity = 0.0;
  double learning_rate = 0.0;
};

struct LmTrainResult {
  ParameterSet params;  // best by validation perplexity
  double valid_perplexity = 0.0;
  std::vector<LmEpochRecord> history;
};

// Throws DataError when the training set has no non-empty sentence.
LmTrainResult train_lm(const LmConfig& config, const std::vector<std::vector<int>>& train,
                       const std::vector<std::vector<int>>& valid, const LmTrainConfig& options);

// Encodes text lines for one language, skipping empty lines.
std::vector<std::vector<int>> encode_lines(const Vocabulary& vocab, const std::vector<std::string>& lines,
                                           std::string_view language);

}  // namespace fasr
