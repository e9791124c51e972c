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

#include "fasr/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "fasr/ctc.hpp"
#include "fasr/error.hpp"

namespace fasr {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Everything needed to score continuations of one utterance.
struct Session {
  Session(const AsrModel& m, const LanguageModel* external_lm, const Matrix& h, const DecodeConfig& c)
      : model(m), config(c), scope(m.params) {
    if (has_fusion_layer(m.fusion)) {
      if (!m.lm_config) throw ConfigError("fused model has no embedded language model");
      lm = {&scope, &*m.lm_config};
    } else if (external_lm != nullptr && c.lm_weight != 0.0) {
      if (!(external_lm->vocab == m.vocab)) throw ConfigError("LM vocabulary differs from the model vocabulary");
      lm_scope.emplace(external_lm->params);
      lm = {&*lm_scope, &external_lm->config};
    }
    use_lm_term = lm.active() && c.lm_weight != 0.0;
    use_ctc = c.ctc_weight != 0.0;
    const Var hv = Var::constant(h);
    memory = prepare_attention(scope, hv);
    if (use_ctc) ctc_lp = ctc_log_probs(scope, hv).value();
  }

  const AsrModel& model;
  const DecodeConfig& config;
  ParamScope scope;
  std::optional<ParamScope> lm_scope;
  LmBinding lm;
  AttentionMemory memory;
  Matrix ctc_lp;
  bool use_lm_term = false;
  bool use_ctc = false;
};

struct Hyp {
  std::vector<int> tokens;  // after sos
  ModelState state;         // before consuming the last token
  int last = kSos;
  ctc::PrefixState ctc_state;
  double att = 0.0;
  double ctc = 0.0;
  double lm = 0.0;
  double score = 0.0;
  int chars = 0;
  bool has_language = false;
};

struct Candidate {
  double score;
  std::size_t parent;
  int token;
  double att;
  double lm;
  double ctc_increment;
  std::optional<ctc::PrefixState> ctc_state;
};

bool is_character(const Vocabulary& vocab, int token) {
  return token >= kNumReserved && !vocab.is_language_token(token);
}

ScoredHypothesis to_scored(const Hyp& h) { return {h.tokens, h.att, h.ctc, h.lm, h.score}; }

bool better(const ScoredHypothesis& a, const ScoredHypothesis& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.tokens < b.tokens;
}

}  // namespace

std::string_view to_string(LanguagePolicy policy) {
  switch (policy) {
    case LanguagePolicy::kNone:
      return "none";
    case LanguagePolicy::kForced:
      return "forced";
    case LanguagePolicy::kFree:
      return "free";
  }
  return "none";
}

LanguagePolicy parse_language_policy(std::string_view text) {
  if (text == "none") return LanguagePolicy::kNone;
  if (text == "forced") return LanguagePolicy::kForced;
  if (text == "free") return LanguagePolicy::kFree;
  throw ConfigError("unknown language policy '" + std::string(text) + "' (expected none, forced or free)");
}

void DecodeConfig::validate() const {
  if (beam < 1) throw ConfigError("beam must be at least 1");
  if (!(ctc_weight >= 0.0 && ctc_weight <= 1.0)) throw ConfigError("ctc weight must be in [0, 1]");
  if (!std::isfinite(lm_weight) || lm_weight < 0.0) throw ConfigError("lm weight must be finite and non-negative");
  if (!(max_length_ratio > 0.0) || max_length_offset < 0) throw ConfigError("invalid max length settings");
  if (!std::isfinite(length_penalty)) throw ConfigError("length penalty must be finite");
  if (nbest < 1) throw ConfigError("nbest must be at least 1");
}

int max_output_length(const DecodeConfig& config, int encoder_frames) {
  if (config.max_length >= 0) return config.max_length;
  return static_cast<int>(std::ceil(config.max_length_ratio * encoder_frames)) + config.max_length_offset;
}

std::vector<ScoredHypothesis> beam_search(const AsrModel& model, const LanguageModel* lm, const Matrix& features,
                                          const DecodeConfig& config, std::string_view language) {
  NoGradGuard no_grad;
  ParamScope scope(model.params);
  const Matrix h = encode(scope, model.config, features).value();
  return beam_search_encoded(model, lm, h, config, language);
}

std::vector<ScoredHypothesis> beam_search_encoded(const AsrModel& model, const LanguageModel* lm, const Matrix& h,
                                                  const DecodeConfig& config, std::string_view language) {
  config.validate();
  if (h.rows < 1) throw DataError("cannot decode an empty input");
  NoGradGuard no_grad;
  Session s(model, lm, h, config);
  const double w_att = 1.0 - config.ctc_weight;
  const double w_ctc = config.ctc_weight;
  const double beta = config.lm_weight;
  const auto beam = static_cast<std::size_t>(config.beam);
  const int max_chars = max_output_length(config, h.rows);
  const Vocabulary& vocab = model.vocab;

  std::vector<int> characters;
  for (int t = 0; t < vocab.size(); ++t)
    if (is_character(vocab, t)) characters.push_back(t);
  const std::vector<int> language_ids = vocab.language_tokens();

  Hyp root;
  root.state = initial_model_state(model, s.memory, s.lm);
  if (s.use_ctc) root.ctc_state = ctc::initial_prefix_state(s.ctc_lp);
  if (config.language_policy == LanguagePolicy::kNone) root.has_language = true;
  if (config.language_policy == LanguagePolicy::kFree && language_ids.empty()) {
    throw ConfigError("free language policy needs language-ID tokens in the vocabulary");
  }

  std::vector<Hyp> live;
  if (config.language_policy == LanguagePolicy::kForced) {
    const int lang = vocab.language_token(language);
    const ModelStep step = model_step(s.scope, model, root.state, kSos, s.memory, s.lm);
    Hyp first = root;
    first.tokens = {lang};
    first.state = step.state;
    first.last = lang;
    first.att = step.log_probs.value()(0, lang);
    first.lm = s.use_lm_term ? step.lm_log_probs.value()(0, lang) : 0.0;
    first.score = w_att * first.att + (s.use_lm_term ? beta * first.lm : 0.0);
    first.has_language = true;
    live.push_back(std::move(first));
  } else {
    live.push_back(std::move(root));
  }

  std::vector<ScoredHypothesis> pool;
  const std::vector<int> eos_only = {kEos};
  while (!live.empty()) {
    std::vector<ModelStep> steps;
    steps.reserve(live.size());
    std::vector<Candidate> candidates;
    for (std::size_t i = 0; i < live.size(); ++i) {
      const Hyp& hyp = live[i];
      steps.push_back(model_step(s.scope, model, hyp.state, hyp.last, s.memory, s.lm));
      const Matrix& att_lp = steps.back().log_probs.value();
      const Matrix* lm_lp = s.use_lm_term ? &steps.back().lm_log_probs.value() : nullptr;

      const std::vector<int>* allowed = &characters;
      bool allow_eos = true;
      if (!hyp.has_language) {
        allowed = &language_ids;
        allow_eos = false;
      } else if (hyp.chars >= max_chars) {
        allowed = &eos_only;
        allow_eos = false;
      }
      auto consider = [&](int token) {
        Candidate c{0.0, i, token, att_lp(0, token), lm_lp ? (*lm_lp)(0, token) : 0.0, 0.0, std::nullopt};
        if (s.use_ctc) {
          if (token == kEos) {
            c.ctc_increment = ctc::end_increment(hyp.ctc_state);
          } else if (is_character(vocab, token)) {
            ctc::PrefixExtension ext = ctc::extend_prefix(hyp.ctc_state, token, s.ctc_lp, kEos);
            c.ctc_increment = ext.increment;
            c.ctc_state = std::move(ext.state);
          }
        }
        c.score = hyp.score + w_att * c.att;
        if (s.use_ctc) c.score += w_ctc * c.ctc_increment;
        if (s.use_lm_term) c.score += beta * c.lm;
        if (is_character(vocab, token)) c.score += config.length_penalty;
        if (c.score > kNegInf) candidates.push_back(std::move(c));
      };
      for (int token : *allowed) consider(token);
      if (allow_eos) consider(kEos);
    }

    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.parent != b.parent) return a.parent < b.parent;
      return a.token < b.token;
    });
    if (candidates.size() > beam) candidates.resize(beam);

    std::vector<Hyp> next;
    for (auto& c : candidates) {
      const Hyp& parent = live[c.parent];
      Hyp h2;
      h2.tokens = parent.tokens;
      h2.tokens.push_back(c.token);
      h2.att = parent.att + c.att;
      h2.lm = parent.lm + (s.use_lm_term ? c.lm : 0.0);
      h2.ctc = parent.ctc + (s.use_ctc ? c.ctc_increment : 0.0);
      h2.score = c.score;
      h2.chars = parent.chars + (is_character(vocab, c.token) ? 1 : 0);
      h2.has_language = parent.has_language || vocab.is_language_token(c.token);
      if (c.token == kEos) {
        pool.push_back(to_scored(h2));
        continue;
      }
      h2.state = steps[c.parent].state;
      h2.last = c.token;
      h2.ctc_state = c.ctc_state ? std::move(*c.ctc_state) : parent.ctc_state;
      next.push_back(std::move(h2));
    }
    std::sort(pool.begin(), pool.end(), better);
    if (pool.size() > beam) pool.resize(beam);
    live = std::move(next);

    // Scores never increase along a path without a length bonus, so a full
    // pool whose worst entry beats every live hypothesis is final.
    if (!live.empty() && pool.size() == beam && config.length_penalty <= 0.0) {
      double best_live = kNegInf;
      for (const auto& hyp : live) best_live = std::max(best_live, hyp.score);
      if (best_live <= pool.back().score) break;
    }
  }

  if (pool.size() > static_cast<std::size_t>(config.nbest)) pool.resize(static_cast<std::size_t>(config.nbest));
  return pool;
}

ScoredHypothesis rescore_encoded(const AsrModel& model, const LanguageModel* lm, const Matrix& h,
                                 const std::vector<int>& tokens, const DecodeConfig& config) {
  config.validate();
  if (tokens.empty() || tokens.back() != kEos) throw std::invalid_argument("sequence must end with eos");
  NoGradGuard no_grad;
  Session s(model, lm, h, config);
  ScoredHypothesis out;
  out.tokens = tokens;
  ModelState state = initial_model_state(model, s.memory, s.lm);
  int previous = kSos;
  std::vector<int> chars;
  for (int token : tokens) {
    ModelStep step = model_step(s.scope, model, state, previous, s.memory, s.lm);
    out.att += step.log_probs.value()(0, token);
    if (s.use_lm_term) out.lm += step.lm_log_probs.value()(0, token);
    if (is_character(model.vocab, token)) chars.push_back(token);
    state = std::move(step.state);
    previous = token;
  }
  if (s.use_ctc) out.ctc = ctc::log_likelihood(s.ctc_lp, chars);
  out.score = (1.0 - config.ctc_weight) * out.att + config.length_penalty * static_cast<double>(chars.size());
  if (s.use_ctc) out.score += config.ctc_weight * out.ctc;
  if (s.use_lm_term) out.score += config.lm_weight * out.lm;
  return out;
}

}  // namespace fasr
