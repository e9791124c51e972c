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

// Synthetic "languages" for desk-scale experiments. All languages built from
// the same pool seed share one pool of phone templates; each language picks
// its own alphabet, character-to-phone assignment and bigram grammar.

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "fasr/features.hpp"

namespace fasr::synth {

struct LanguageOptions {
  int pool_size = 20;
  int feature_dim = 8;
  int min_duration = 4;
  int max_duration = 8;
  double noise_sigma = 0.1;
  // Probability mass on the two preferred successors of every character; the
  // remainder is spread evenly. Higher means a more predictable grammar.
  double top_successor_mass = 0.75;
  double second_successor_mass = 0.15;
};

struct SyntheticLanguage {
  std::string name;
  std::vector<char32_t> alphabet;
  std::vector<int> phone_of;                    // per alphabet entry: template index
  std::vector<std::vector<double>> templates;   // shared pool, pool_size x feature_dim
  std::vector<double> start;                    // first-character distribution
  std::vector<std::vector<double>> bigram;      // row-stochastic, alphabet x alphabet
  int min_duration = 4;
  int max_duration = 8;
  double noise_sigma = 0.1;

  int feature_dim() const { return templates.empty() ? 0 : static_cast<int>(templates.front().size()); }
};

std::vector<std::vector<double>> make_template_pool(std::uint64_t pool_seed, int pool_size, int feature_dim);

// Throws ConfigError when alphabet_size exceeds the pool size.
SyntheticLanguage make_language(const std::string& name, std::uint64_t pool_seed, std::uint64_t lang_seed,
                                int alphabet_size, const LanguageOptions& options = {});

struct CorpusSpec {
  int num_utterances = 1;
  int min_length = 3;  // characters
  int max_length = 8;
  std::uint64_t seed = 0;
  std::string id_prefix = "utt";
};

struct SampledUtterance {
  std::string utt_id;
  std::string text;
  Features features;
};

// One sentence of exactly `length` characters drawn from the bigram chain.
std::string sample_sentence(const SyntheticLanguage& lang, int length, std::mt19937_64& rng);

// Utterance i depends only on (lang, spec, i), so generation order does not
// matter.
SampledUtterance sample_utterance(const SyntheticLanguage& lang, const CorpusSpec& spec, int index);
std::vector<SampledUtterance> sample_utterances(const SyntheticLanguage& lang, const CorpusSpec& spec);
std::vector<std::string> sample_texts(const SyntheticLanguage& lang, const CorpusSpec& spec);

struct CorpusFiles {
  std::filesystem::path manifest;
  std::filesystem::path text;
  std::vector<UtteranceRecord> records;
};

// Writes feats/<utt_id>.fea, manifest.jsonl and text.txt (one transcript per
// line) under `directory`.
CorpusFiles write_corpus(const SyntheticLanguage& lang, const CorpusSpec& spec,
                         const std::filesystem::path& directory);

void write_text(const std::filesystem::path& path, const std::vector<std::string>& lines);
std::vector<std::string> read_text(const std::filesystem::path& path);

// Expected negative log-likelihood per predicted token (language id, every
// character, end of sentence) of sentences from this language, computed
// exactly from the generator's distributions. The language id is
// deterministic and contributes zero loss but counts as a token.
double true_token_entropy(const SyntheticLanguage& lang, int min_length, int max_length);

}  // namespace fasr::synth
