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

#include "fasr/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "fasr/error.hpp"
#include "fasr/params.hpp"
#include "fasr/utf8.hpp"

namespace fasr::synth {
namespace {

constexpr int kInventorySize = 26;  // characters come from 'a'..'z'

// Preferred entries get the configured masses, everything else shares the
// remainder evenly.
std::vector<double> peaked_distribution(int size, const std::vector<int>& preferred, const LanguageOptions& o) {
  std::vector<double> p(static_cast<std::size_t>(size), 0.0);
  std::vector<bool> is_preferred(static_cast<std::size_t>(size), false);
  const double masses[2] = {o.top_successor_mass, o.second_successor_mass};
  double used = 0.0;
  int num_preferred = 0;
  for (std::size_t k = 0; k < preferred.size() && k < 2; ++k) {
    p[static_cast<std::size_t>(preferred[k])] = masses[k];
    is_preferred[static_cast<std::size_t>(preferred[k])] = true;
    used += masses[k];
    ++num_preferred;
  }
  const int rest = size - num_preferred;
  if (rest > 0) {
    const double share = std::max(0.0, 1.0 - used) / rest;
    for (std::size_t i = 0; i < p.size(); ++i)
      if (!is_preferred[i]) p[i] = share;
  }
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  for (double& v : p) v /= total;
  return p;
}

int sample_index(const std::vector<double>& probs, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double r = u(rng);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    r -= probs[i];
    if (r < 0.0) return static_cast<int>(i);
  }
  // Rounding slack: fall back to the last entry with mass.
  for (std::size_t i = probs.size(); i-- > 0;)
    if (probs[i] > 0.0) return static_cast<int>(i);
  return 0;
}

}  // namespace

std::vector<std::vector<double>> make_template_pool(std::uint64_t pool_seed, int pool_size, int feature_dim) {
  if (pool_size <= 0 || feature_dim <= 0) throw ConfigError("template pool needs positive size and dimension");
  std::mt19937_64 rng(mix_seed(pool_seed, 0x706f6f6c));
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<std::vector<double>> pool(static_cast<std::size_t>(pool_size),
                                        std::vector<double>(static_cast<std::size_t>(feature_dim)));
  for (auto& t : pool)
    for (double& v : t) v = n(rng);
  return pool;
}

SyntheticLanguage make_language(const std::string& name, std::uint64_t pool_seed, std::uint64_t lang_seed,
                                int alphabet_size, const LanguageOptions& options) {
  if (alphabet_size <= 0) throw ConfigError("alphabet size must be positive");
  if (alphabet_size > options.pool_size) {
    throw ConfigError("alphabet size " + std::to_string(alphabet_size) + " exceeds template pool size " +
                      std::to_string(options.pool_size));
  }
  if (alphabet_size > kInventorySize) throw ConfigError("alphabet size exceeds the character inventory");
  if (options.min_duration < 1 || options.max_duration < options.min_duration) {
    throw ConfigError("invalid duration range");
  }

  SyntheticLanguage lang;
  lang.name = name;
  lang.templates = make_template_pool(pool_seed, options.pool_size, options.feature_dim);
  lang.min_duration = options.min_duration;
  lang.max_duration = options.max_duration;
  lang.noise_sigma = options.noise_sigma;

  std::mt19937_64 rng(mix_seed(lang_seed, 0x6c616e67));
  std::vector<char32_t> inventory(kInventorySize);
  std::iota(inventory.begin(), inventory.end(), U'a');
  std::shuffle(inventory.begin(), inventory.end(), rng);
  lang.alphabet.assign(inventory.begin(), inventory.begin() + alphabet_size);
  std::sort(lang.alphabet.begin(), lang.alphabet.end());

  std::vector<int> phones(static_cast<std::size_t>(options.pool_size));
  std::iota(phones.begin(), phones.end(), 0);
  std::shuffle(phones.begin(), phones.end(), rng);
  lang.phone_of.assign(phones.begin(), phones.begin() + alphabet_size);

  std::vector<int> order(static_cast<std::size_t>(alphabet_size));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  lang.start = peaked_distribution(alphabet_size, order, options);

  lang.bigram.resize(static_cast<std::size_t>(alphabet_size));
  for (int i = 0; i < alphabet_size; ++i) {
    std::vector<int> successors;
    for (int j = 0; j < alphabet_size; ++j)
      if (j != i) successors.push_back(j);
    std::shuffle(successors.begin(), successors.end(), rng);
    if (successors.empty()) successors.push_back(i);
    lang.bigram[static_cast<std::size_t>(i)] = peaked_distribution(alphabet_size, successors, options);
  }
  return lang;
}

std::string sample_sentence(const SyntheticLanguage& lang, int length, std::mt19937_64& rng) {
  std::vector<char32_t> chars;
  int prev = -1;
  for (int n = 0; n < length; ++n) {
    prev = sample_index(prev < 0 ? lang.start : lang.bigram[static_cast<std::size_t>(prev)], rng);
    chars.push_back(lang.alphabet[static_cast<std::size_t>(prev)]);
  }
  return utf8::encode(chars);
}

SampledUtterance sample_utterance(const SyntheticLanguage& lang, const CorpusSpec& spec, int index) {
  if (spec.min_length < 1 || spec.max_length < spec.min_length) throw ConfigError("invalid utterance length range");
  std::mt19937_64 rng(mix_seed(spec.seed, static_cast<std::uint64_t>(index)));
  std::uniform_int_distribution<int> length_dist(spec.min_length, spec.max_length);
  std::uniform_int_distribution<int> duration_dist(lang.min_duration, lang.max_duration);
  std::normal_distribution<double> noise(0.0, 1.0);

  SampledUtterance u;
  char id[32];
  std::snprintf(id, sizeof(id), "%06d", index);
  u.utt_id = spec.id_prefix + "-" + id;
  u.text = sample_sentence(lang, length_dist(rng), rng);

  const int dim = lang.feature_dim();
  u.features.dim = dim;
  for (char32_t c : utf8::decode(u.text)) {
    const auto pos = std::find(lang.alphabet.begin(), lang.alphabet.end(), c) - lang.alphabet.begin();
    const auto& tmpl = lang.templates[static_cast<std::size_t>(lang.phone_of[static_cast<std::size_t>(pos)])];
    const int duration = duration_dist(rng);
    for (int f = 0; f < duration; ++f) {
      for (int d = 0; d < dim; ++d) {
        const double v = tmpl[static_cast<std::size_t>(d)] + lang.noise_sigma * noise(rng);
        u.features.data.push_back(static_cast<float>(v));
      }
      ++u.features.frames;
    }
  }
  return u;
}

std::vector<SampledUtterance> sample_utterances(const SyntheticLanguage& lang, const CorpusSpec& spec) {
  if (spec.num_utterances < 1) throw ConfigError("corpus needs at least one utterance");
  std::vector<SampledUtterance> out;
  out.reserve(static_cast<std::size_t>(spec.num_utterances));
  for (int i = 0; i < spec.num_utterances; ++i) out.push_back(sample_utterance(lang, spec, i));
  return out;
}

std::vector<std::string> sample_texts(const SyntheticLanguage& lang, const CorpusSpec& spec) {
  if (spec.num_utterances < 1) throw ConfigError("corpus needs at least one sentence");
  if (spec.min_length < 1 || spec.max_length < spec.min_length) throw ConfigError("invalid sentence length range");
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(spec.num_utterances));
  for (int i = 0; i < spec.num_utterances; ++i) {
    std::mt19937_64 rng(mix_seed(spec.seed, static_cast<std::uint64_t>(i)));
    std::uniform_int_distribution<int> length_dist(spec.min_length, spec.max_length);
    out.push_back(sample_sentence(lang, length_dist(rng), rng));
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& l : lines) out << l << '\n';
  if (!out) throw DataError("failed writing " + path.string());
}

std::vector<std::string> read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

CorpusFiles write_corpus(const SyntheticLanguage& lang, const CorpusSpec& spec,
                         const std::filesystem::path& directory) {
  const auto utterances = sample_utterances(lang, spec);
  std::error_code ec;
  std::filesystem::create_directories(directory / "feats", ec);
  if (ec) throw DataError("cannot create " + (directory / "feats").string() + ": " + ec.message());

  CorpusFiles files;
  files.manifest = directory / "manifest.jsonl";
  files.text = directory / "text.txt";
  std::vector<std::string> lines;
  for (const auto& u : utterances) {
    const std::string rel = "feats/" + u.utt_id + ".fea";
    write_features(directory / rel, u.features);
    files.records.push_back({u.utt_id, lang.name, rel, u.text, u.features.frames});
    lines.push_back(u.text);
  }
  write_manifest(files.manifest, files.records);
  write_text(files.text, lines);
  return files;
}

double true_token_entropy(const SyntheticLanguage& lang, int min_length, int max_length) {
  const std::size_t a = lang.alphabet.size();
  auto entropy = [](const std::vector<double>& p) {
    double h = 0.0;
    for (double v : p)
      if (v > 0.0) h -= v * std::log(v);
    return h;
  };
  std::vector<double> row_entropy(a);
  for (std::size_t i = 0; i < a; ++i) row_entropy[i] = entropy(lang.bigram[i]);

  const int lengths = max_length - min_length + 1;
  auto p_len = [&](int n) { return (n >= min_length && n <= max_length) ? 1.0 / lengths : 0.0; };
  auto p_longer = [&](int n) {  // P(L > n)
    double s = 0.0;
    for (int m = n + 1; m <= max_length; ++m) s += p_len(m);
    return s;
  };

  double nll = entropy(lang.start);
  std::vector<double> state = lang.start;  // distribution of the n-th character
  for (int n = 1; n <= max_length; ++n) {
    const double longer = p_longer(n);
    const double stop = p_len(n);
    const double alive = longer + stop;  // P(L >= n)
    if (alive <= 0.0) break;
    // Stop/continue decision given the sentence reached n characters.
    const double h = stop / alive;
    if (h > 0.0) nll += stop * -std::log(h);
    if (h < 1.0) nll += longer * -std::log(1.0 - h);
    if (longer > 0.0) {
      double next_char = 0.0;
      for (std::size_t i = 0; i < a; ++i) next_char += state[i] * row_entropy[i];
      nll += longer * next_char;
      std::vector<double> next(a, 0.0);
      for (std::size_t i = 0; i < a; ++i)
        for (std::size_t j = 0; j < a; ++j) next[j] += state[i] * lang.bigram[i][j];
      state = std::move(next);
    }
  }
  const double mean_length = 0.5 * (min_length + max_length);
  return nll / (mean_length + 2.0);
}

}  // namespace fasr::synth
