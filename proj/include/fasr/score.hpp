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

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fasr/features.hpp"

namespace fasr {

// Levenshtein distance with unit substitution, insertion and deletion costs.
std::size_t edit_distance(std::span<const std::string> ref, std::span<const std::string> hyp);

// Whitespace-normalized words (runs of spaces collapse; empty string -> none).
std::vector<std::string> split_words(std::string_view text);
// UTF-8 characters of the normalized string, spaces excluded.
std::vector<std::string> split_chars(std::string_view text);

// Drops "<...>" language/special markers.
std::string strip_language_tags(std::string_view text);

struct ErrorCounts {
  std::size_t errors = 0;
  std::size_t ref_tokens = 0;
  double rate() const { return ref_tokens == 0 ? (errors == 0 ? 0.0 : 1.0) : double(errors) / double(ref_tokens); }
};

ErrorCounts word_errors(std::string_view ref, std::string_view hyp);
ErrorCounts char_errors(std::string_view ref, std::string_view hyp);

struct NBestRecord {
  std::string utt_id;
  int rank = 0;
  std::string text;
  double att = 0.0;
  double ctc = 0.0;
  double lm = 0.0;
  double score = 0.0;
};

void write_nbest(const std::filesystem::path& path, std::span<const NBestRecord> records);
std::vector<NBestRecord> read_nbest(const std::filesystem::path& path);

struct UtteranceScore {
  std::string utt_id;
  ErrorCounts words;
  ErrorCounts chars;
};

struct ScoreReport {
  ErrorCounts words;
  ErrorCounts chars;
  std::vector<UtteranceScore> utterances;  // ordered by utt_id

  double wer() const { return words.rate(); }
  double cer() const { return chars.rate(); }
  nlohmann::json to_json() const;
};

// Scores the rank-0 hypothesis of every reference utterance. Throws DataError
// listing ids present on one side only.
ScoreReport score(std::span<const UtteranceRecord> refs, std::span<const NBestRecord> hyps);

}  // namespace fasr
