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

// Joint attention + CTC + LM beam search. Every candidate token adds
//   (1 - ctc_weight) * ln P_att + ctc_weight * CTC prefix increment
//   + lm_weight * ln P_LM
// to its parent's score.

#include <string>
#include <string_view>
#include <vector>

#include "fasr/model.hpp"
#include "fasr/rnnlm.hpp"

namespace fasr {

enum class LanguagePolicy {
  kNone,    // no language-ID position at all
  kForced,  // hypotheses start [sos, <lang>]
  kFree,    // the first expansion is restricted to language-ID tokens
};

std::string_view to_string(LanguagePolicy policy);
LanguagePolicy parse_language_policy(std::string_view text);

struct DecodeConfig {
  int beam = 20;
  double ctc_weight = 0.3;
  double lm_weight = 0.3;
  // Character budget: ceil(ratio * T') + offset unless max_length >= 0.
  double max_length_ratio = 1.5;
  int max_length_offset = 2;
  int max_length = -1;
  double length_penalty = 0.0;  // added per emitted character
  LanguagePolicy language_policy = LanguagePolicy::kForced;
  int nbest = 5;

  // Throws ConfigError.
  void validate() const;
};

struct ScoredHypothesis {
  std::vector<int> tokens;  // after sos, including the language ID and the final eos
  double att = 0.0;         // sum of ln P_att
  double ctc = 0.0;         // ln P_CTC of the characters (0 when ctc_weight == 0)
  double lm = 0.0;          // sum of ln P_LM (0 without an LM)
  double score = 0.0;       // combined
};

// Decodes one utterance. Cold/deep models use their embedded LM for both the
// fusion feature and the lm_weight term; otherwise `lm` (may be null) is used
// for shallow fusion. `language` is required by the forced policy.
// Returns up to config.nbest hypotheses, best first.
std::vector<ScoredHypothesis> beam_search(const AsrModel& model, const LanguageModel* lm, const Matrix& features,
                                          const DecodeConfig& config, std::string_view language = {});

// Same, from an already computed encoder output h (T' x encoder_dim).
std::vector<ScoredHypothesis> beam_search_encoded(const AsrModel& model, const LanguageModel* lm, const Matrix& h,
                                                  const DecodeConfig& config, std::string_view language = {});

// Scores a complete token sequence (after sos, ending in eos) the way the
// beam search would, by one teacher-forced pass.
ScoredHypothesis rescore_encoded(const AsrModel& model, const LanguageModel* lm, const Matrix& h,
                                 const std::vector<int>& tokens, const DecodeConfig& config);

// Character budget for an encoder length.
int max_output_length(const DecodeConfig& config, int encoder_frames);

}  // namespace fasr
