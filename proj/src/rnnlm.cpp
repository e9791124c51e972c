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

#include "fasr/rnnlm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "fasr/error.hpp"
#include "fasr/optim.hpp"

namespace fasr {
namespace {

std::string layer_name(int l) { return "lm.lstm" + std::to_string(l); }

void check_token(const LmConfig& config, int token) {
  if (token < 0 || token >= config.vocab_size) {
    throw std::out_of_range("LM token " + std::to_string(token) + " out of range");
  }
}

}  // namespace

void LmConfig::validate() const {
  if (vocab_size <= kNumReserved) throw ConfigError("LM vocabulary too small");
  if (embed_dim < 1 || layers < 1 || units < 1) throw ConfigError("LM sizes must be positive");
}

void add_lm_params(ParameterSet& params, const LmConfig& config, std::mt19937_64& rng) {
  config.validate();
  params.add("lm.embed", uniform_matrix(config.vocab_size, config.embed_dim, 1.0, rng));
  int in = config.embed_dim;
  for (int l = 0; l < config.layers; ++l) {
    add_lstm_params(params, layer_name(l), in, config.units, rng);
    in = config.units;
  }
  add_linear_params(params, "lm.output", config.units, config.vocab_size, rng);
}

LmState initial_lm_state(const LmConfig& config) {
  LmState s;
  for (int l = 0; l < config.layers; ++l) s.layers.push_back(zero_lstm_state(config.units));
  return s;
}

LmStep lm_step(ParamScope& scope, const LmConfig& config, const LmState& state, int token) {
  check_token(config, token);
  const int ids[1] = {token};
  Var x = embedding(scope.get("lm.embed"), ids);
  LmStep out;
  for (std::size_t l = 0; l < state.layers.size(); ++l) {
    out.state.layers.push_back(lstm_step(scope, layer_name(static_cast<int>(l)), x, state.layers[l]));
    x = out.state.layers.back().h;
  }
  out.feature = x;
  out.log_probs = log_softmax(apply_linear(scope, "lm.output", x));
  return out;
}

FramedSentence frame_sentence(std::span<const int> encoded) {
  FramedSentence f;
  f.inputs.push_back(kSos);
  f.inputs.insert(f.inputs.end(), encoded.begin(), encoded.end());
  f.targets.assign(encoded.begin(), encoded.end());
  f.targets.push_back(kEos);
  return f;
}

Var sentence_nll(ParamScope& scope, const LmConfig& config, std::span<const int> encoded) {
  const FramedSentence f = frame_sentence(encoded);
  for (int t : f.inputs) check_token(config, t);
  Var x = embedding(scope.get("lm.embed"), f.inputs);
  for (int l = 0; l < config.layers; ++l) x = lstm_sequence(scope, layer_name(l), x, false);
  const Var lp = log_softmax(apply_linear(scope, "lm.output", x));
  return scale(sum(pick(lp, f.targets)), -1.0);
}

double sentence_log_likelihood_stepwise(const ParameterSet& params, const LmConfig& config,
                                        std::span<const int> encoded) {
  NoGradGuard no_grad;
  ParamScope scope(params);
  const FramedSentence f = frame_sentence(encoded);
  LmState state = initial_lm_state(config);
  double total = 0.0;
  for (std::size_t i = 0; i < f.inputs.size(); ++i) {
    LmStep step = lm_step(scope, config, state, f.inputs[i]);
    total += step.log_probs.value()(0, f.targets[i]);
    state = std::move(step.state);
  }
  return total;
}

double perplexity(const ParameterSet& params, const LmConfig& config, const std::vector<std::vector<int>>& sentences) {
  NoGradGuard no_grad;
  ParamScope scope(params);
  double nll = 0.0;
  std::size_t tokens = 0;
  for (const auto& s : sentences) {
    nll += sentence_nll(scope, config, s).item();
    tokens += s.size() + 1;
  }
  if (tokens == 0) throw DataError("perplexity over an empty set");
  return std::exp(nll / static_cast<double>(tokens));
}

LmTrainResult train_lm(const LmConfig& config, const std::vector<std::vector<int>>& train,
                       const std::vector<std::vector<int>>& valid, const LmTrainConfig& options) {
  config.validate();
  if (options.epochs < 0 || options.batch_size < 1 || options.learning_rate <= 0.0) {
    throw ConfigError("invalid LM training options");
  }
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < train.size(); ++i)
    if (train[i].size() > 1) usable.push_back(i);
  if (usable.empty()) throw DataError("LM training corpus has no non-empty sentence");
  const auto& held_out = valid.empty() ? train : valid;

  std::mt19937_64 init_rng(mix_seed(options.seed, 0x6c6d));
  ParameterSet params;
  add_lm_params(params, config, init_rng);
  const TrainableMask mask = all_trainable(params);

  LmTrainResult result;
  result.params = params;
  result.valid_perplexity = perplexity(params, config, held_out);
  double lr = options.learning_rate;
  int halvings = 0;

  for (int epoch = 1; epoch <= options.epochs; ++epoch) {
    std::vector<std::size_t> order = usable;
    std::mt19937_64 shuffle_rng(mix_seed(options.seed, static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double epoch_nll = 0.0;
    std::size_t epoch_tokens = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(options.batch_size)) {
      const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(options.batch_size));
      std::size_t tokens = 0;
      for (std::size_t i = begin; i < end; ++i) tokens += train[order[i]].size() + 1;
      GradientMap grads;
      for (std::size_t i = begin; i < end; ++i) {
        ParamScope scope(params, &mask);
        const Var nll = sentence_nll(scope, config, train[order[i]]);
        epoch_nll += nll.item();
        backward(scale(nll, 1.0 / static_cast<double>(tokens)));
        accumulate_gradients(grads, scope.gradients());
      }
      epoch_tokens += tokens;
      if (!std::isfinite(epoch_nll)) throw NumericalError("LM training loss is not finite");
      clip_gradients(grads, options.clip_norm);
      sgd_update(params, grads, lr);
    }

    LmEpochRecord rec;
    rec.epoch = epoch;
    rec.train_perplexity = std::exp(epoch_nll / static_cast<double>(epoch_tokens));
    rec.valid_perplexity = perplexity(params, config, held_out);
    rec.learning_rate = lr;
    result.history.push_back(rec);
    if (rec.valid_perplexity < result.valid_perplexity) {
      result.valid_perplexity = rec.valid_perplexity;
      result.params = params;
    } else {
      lr *= 0.5;
      if (++halvings > options.max_halvings) break;
    }
  }
  return result;
}

std::vector<std::vector<int>> encode_lines(const Vocabulary& vocab, const std::vector<std::string>& lines,
                                           std::string_view language) {
  std::vector<std::vector<int>> out;
  for (const auto& l : lines)
    if (!l.empty()) out.push_back(vocab.encode(l, language));
  return out;
}

}  // namespace fasr
